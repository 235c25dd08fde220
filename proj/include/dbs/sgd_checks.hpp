#pragma once

// Statistical checks built on the SGD lab: the geometric-plus-floor bound on
// E||x^j - x*||^2, variance decay of mini-batch means, and equivalence of
// fixed and dynamically apportioned batch schedules under a fixed budget.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "dbs/core.hpp"
#include "dbs/sgd_lab.hpp"

namespace dbs::sgd {

/// Points on the path of the expected iterate, x* + t (x0 - x*), for
/// t = (1 - gamma mu)^j at geometrically spaced j, plus x* itself.
inline std::vector<Vector> path_probes(const Vector& x0, const Vector& optimum, double gamma_mu,
                                       std::int64_t iterations) {
  std::vector<Vector> probes;
  for (std::int64_t j = 0; j <= iterations; j = (j == 0 ? 1 : 2 * j)) {
    const double t = std::pow(1.0 - gamma_mu, static_cast<double>(j));
    probes.push_back(optimum + t * (x0 - optimum));
  }
  probes.push_back(optimum);
  return probes;
}

struct BoundCheckResult {
  double gamma_mu = 0.0;
  double sigma_sq = 0.0;
  double initial_sq_dist = 0.0;
  std::vector<double> mean;
  std::vector<double> std_error;
  std::vector<double> bound;
  double worst_margin = std::numeric_limits<double>::infinity();  // min_j bound + 3 se - mean
  std::int64_t worst_iteration = 0;
  bool passed = false;
};

/// Monte-Carlo mean of ||x^j - x*||^2 against the bound, at every j, with a
/// three-standard-error allowance.
template <ConvexProblem P>
BoundCheckResult check_convergence_bound(const P& problem, double gamma_mu, std::size_t n_workers,
                                      const PlanSource& plans, const Vector& x0, std::int64_t iterations,
                                      std::int64_t n_seeds, std::int64_t noise_draws, std::uint64_t seed) {
  BoundCheckResult r;
  r.gamma_mu = gamma_mu;
  SgdConfig config;
  config.step_size = gamma_mu / problem.mu();
  config.momentum = 0.0;
  config.n_iterations = iterations;
  config.aggregation = Aggregation::batch_weighted;
  config.validate(problem.mu());

  const auto probes = path_probes(x0, problem.optimum(), gamma_mu, iterations);
  const std::int64_t batch = plans.plan_for_epoch(0).batch_total();
  r.sigma_sq = estimate_gradient_noise(problem, probes, batch, noise_draws, seed ^ 0x51d3u);
  r.initial_sq_dist = (x0 - problem.optimum()).squaredNorm();

  const auto stats = monte_carlo(problem, config, n_workers, plans, x0, n_seeds, seed);
  r.mean = stats.mean;
  r.std_error = stats.std_error;
  r.bound.reserve(r.mean.size());
  for (std::size_t j = 0; j < r.mean.size(); ++j) {
    r.bound.push_back(theorem1_bound(static_cast<std::int64_t>(j), config.step_size, problem.mu(),
                                     r.initial_sq_dist, r.sigma_sq));
    const double margin = r.bound[j] + 3.0 * r.std_error[j] - r.mean[j];
    if (margin < r.worst_margin) {
      r.worst_margin = margin;
      r.worst_iteration = static_cast<std::int64_t>(j);
    }
  }
  r.passed = r.worst_margin >= 0.0;
  return r;
}

struct VarianceCheckResult {
  std::vector<VarianceEstimate> estimates;
  std::vector<double> ratios;               // var(m_k) / var(m_{k+1})
  double worst_monotone_margin = std::numeric_limits<double>::infinity();
  double worst_ratio_error = 0.0;           // max |ratio / (m_{k+1}/m_k) - 1|
  bool monotone = false;
  bool ratio_ok = false;
  bool passed = false;
};

/// Variance of the mini-batch mean must not increase with m beyond three
/// standard errors; with i.i.d. draws it must fall as 1/m within
/// `ratio_tolerance`.
template <ConvexProblem P>
VarianceCheckResult check_variance_decay(const P& problem, const Vector& x, std::span<const std::int64_t> m_values,
                              std::int64_t n_draws, std::uint64_t seed, double ratio_tolerance = 0.10) {
  VarianceCheckResult r;
  r.estimates = verify_lemma1_variance(problem, x, m_values, n_draws, seed, Sampling::with_replacement);
  r.monotone = true;
  r.ratio_ok = true;
  for (std::size_t k = 0; k + 1 < r.estimates.size(); ++k) {
    const auto& a = r.estimates[k];
    const auto& b = r.estimates[k + 1];
    const double allowance = 3.0 * std::hypot(a.std_error, b.std_error);
    const double margin = a.variance + allowance - b.variance;
    r.worst_monotone_margin = std::min(r.worst_monotone_margin, margin);
    if (margin < 0.0) r.monotone = false;

    const double ratio = b.variance > 0.0 ? a.variance / b.variance : std::numeric_limits<double>::infinity();
    r.ratios.push_back(ratio);
    const double expected = static_cast<double>(b.m) / static_cast<double>(a.m);
    const double err = std::abs(ratio / expected - 1.0);
    r.worst_ratio_error = std::max(r.worst_ratio_error, err);
    if (!(err <= ratio_tolerance)) r.ratio_ok = false;
  }
  r.passed = r.monotone && r.ratio_ok;
  return r;
}

struct EquivalenceCheckResult {
  TrajectoryStats fixed;
  TrajectoryStats dynamic;
  double relative_difference = 0.0;  // |gap_dyn - gap_fixed| / gap_fixed, seed means
  double worst_z = 0.0;              // max_j |mean diff| / combined standard error
  std::int64_t worst_iteration = 0;
  std::vector<std::int64_t> fixed_batches;
  std::vector<std::int64_t> dynamic_batches;  // from the last plan of the dynamic stream
  bool final_ok = false;
  bool trajectory_ok = false;
  bool passed = false;
};

/// Runs the same seeds under the fixed and the dynamic plan streams and
/// compares the seed-mean final optimality gap and the per-iteration means.
template <ConvexProblem P>
EquivalenceCheckResult check_dbs_equivalence(const P& problem, const SgdConfig& config, std::size_t n_workers,
                                             const PlanSource& fixed_plans, const PlanSource& dynamic_plans,
                                             const Vector& x0, std::int64_t n_seeds, std::uint64_t seed,
                                             double relative_tolerance = 0.02, double z_limit = 3.0) {
  EquivalenceCheckResult r;
  r.fixed = monte_carlo(problem, config, n_workers, fixed_plans, x0, n_seeds, seed);
  r.dynamic = monte_carlo(problem, config, n_workers, dynamic_plans, x0, n_seeds, seed);
  r.fixed_batches = fixed_plans.plan_for_epoch(0).int_batches;
  r.dynamic_batches = dynamic_plans.plan_for_epoch(dynamic_plans.size() - 1).int_batches;

  r.relative_difference = std::abs(r.dynamic.final_loss_mean - r.fixed.final_loss_mean) / r.fixed.final_loss_mean;
  r.final_ok = r.relative_difference <= relative_tolerance;

  for (std::size_t j = 0; j < r.fixed.mean.size(); ++j) {
    const double diff = std::abs(r.dynamic.mean[j] - r.fixed.mean[j]);
    const double se = std::hypot(r.fixed.std_error[j], r.dynamic.std_error[j]);
    const double z = se > 0.0 ? diff / se : (diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (z > r.worst_z) {
      r.worst_z = z;
      r.worst_iteration = static_cast<std::int64_t>(j);
    }
  }
  r.trajectory_ok = r.worst_z <= z_limit;
  r.passed = r.final_ok && r.trajectory_ok;
  return r;
}

}  // namespace dbs::sgd
