#pragma once

// Mini-batch SGD on synthetic strongly-convex problems, run the way a
// synchronous data-parallel cluster would run it: every worker samples a
// batch from its own span, gradients are aggregated, one shared update.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <exception>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dbs/core.hpp"
#include "dbs/error.hpp"

namespace dbs::sgd {

using Vector = Eigen::VectorXd;

/// A finite-sum objective f(x) = (1/N) sum_i f_i(x) with known strong
/// convexity modulus and minimizer.
template <class P>
concept ConvexProblem = requires(const P& p, std::int64_t i, const Vector& x, Vector& g) {
  { p.dimension() } -> std::convertible_to<Eigen::Index>;
  { p.sample_count() } -> std::convertible_to<std::int64_t>;
  { p.mu() } -> std::convertible_to<double>;
  { p.optimum() } -> std::convertible_to<const Vector&>;
  { p.sample_loss(i, x) } -> std::convertible_to<double>;
  { p.add_sample_gradient(i, x, g) };
  { p.suboptimality(x) } -> std::convertible_to<double>;
};

struct QuadraticSpec {
  Eigen::Index dimension = 10;
  double mu = 1.0;
  double noise_scale = 1.0;
  std::int64_t sample_count = 1024;
};

/// f_i(x) = (mu/2) ||x - x* - eps_i||^2 with the eps_i centered, so x* is the
/// exact minimizer of the average and f(x) - f(x*) = (mu/2) ||x - x*||^2.
class QuadraticProblem {
 public:
  QuadraticProblem(const QuadraticSpec& spec, std::uint64_t seed) : mu_(spec.mu), noise_scale_(spec.noise_scale) {
    if (spec.dimension < 1) throw Error(Errc::configuration, "dimension must be positive");
    if (!(spec.mu > 0.0)) throw Error(Errc::configuration, "mu must be positive");
    if (!(spec.noise_scale >= 0.0)) throw Error(Errc::configuration, "noise scale must be non-negative");
    if (spec.sample_count < 1) throw Error(Errc::configuration, "sample count must be positive");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    optimum_.resize(spec.dimension);
    for (auto& v : optimum_) v = normal(rng);
    noise_.resize(spec.dimension, spec.sample_count);
    for (Eigen::Index c = 0; c < noise_.cols(); ++c) {
      for (Eigen::Index r = 0; r < noise_.rows(); ++r) noise_(r, c) = spec.noise_scale * normal(rng);
    }
    const Vector mean = noise_.rowwise().mean();
    noise_.colwise() -= mean;
  }

  Eigen::Index dimension() const { return optimum_.size(); }
  std::int64_t sample_count() const { return noise_.cols(); }
  double mu() const { return mu_; }
  double noise_scale() const { return noise_scale_; }
  const Vector& optimum() const { return optimum_; }
  const Eigen::MatrixXd& noise() const { return noise_; }

  double sample_loss(std::int64_t i, const Vector& x) const {
    return 0.5 * mu_ * (x - optimum_ - noise_.col(i)).squaredNorm();
  }

  void add_sample_gradient(std::int64_t i, const Vector& x, Vector& g) const {
    g.noalias() += mu_ * (x - optimum_ - noise_.col(i));
  }

  Vector full_gradient(const Vector& x) const { return mu_ * (x - optimum_); }

  double suboptimality(const Vector& x) const { return 0.5 * mu_ * (x - optimum_).squaredNorm(); }

 private:
  double mu_;
  double noise_scale_;
  Vector optimum_;
  Eigen::MatrixXd noise_;
};

struct LogisticSpec {
  Eigen::Index dimension = 5;
  std::int64_t sample_count = 512;
  double lambda = 0.1;  // l2 weight, which is also the strong convexity modulus
  double separation = 1.0;
};

/// l2-regularized logistic regression on two Gaussian classes. The minimizer
/// is found by damped Newton iterations at construction.
class LogisticProblem {
 public:
  LogisticProblem(const LogisticSpec& spec, std::uint64_t seed) : lambda_(spec.lambda) {
    if (spec.dimension < 1 || spec.sample_count < 2) throw Error(Errc::configuration, "problem too small");
    if (!(spec.lambda > 0.0)) throw Error(Errc::configuration, "lambda must be positive");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index d = spec.dimension;
    const Vector direction = Vector::Ones(d) / std::sqrt(static_cast<double>(d));
    features_.resize(d, spec.sample_count);
    labels_.resize(spec.sample_count);
    for (std::int64_t i = 0; i < spec.sample_count; ++i) {
      const double y = (i % 2 == 0) ? 1.0 : -1.0;
      labels_(i) = y;
      for (Eigen::Index r = 0; r < d; ++r) features_(r, i) = y * spec.separation * direction(r) + normal(rng);
    }
    optimum_ = solve_optimum();
    optimum_loss_ = loss(optimum_);
  }

  Eigen::Index dimension() const { return features_.rows(); }
  std::int64_t sample_count() const { return features_.cols(); }
  double mu() const { return lambda_; }
  const Vector& optimum() const { return optimum_; }

  double sample_loss(std::int64_t i, const Vector& x) const {
    const double margin = labels_(i) * features_.col(i).dot(x);
    return softplus(-margin) + 0.5 * lambda_ * x.squaredNorm();
  }

  void add_sample_gradient(std::int64_t i, const Vector& x, Vector& g) const {
    const double margin = labels_(i) * features_.col(i).dot(x);
    g.noalias() += -labels_(i) * sigmoid(-margin) * features_.col(i);
    g.noalias() += lambda_ * x;
  }

  double loss(const Vector& x) const {
    double total = 0.0;
    for (std::int64_t i = 0; i < sample_count(); ++i) total += sample_loss(i, x);
    return total / static_cast<double>(sample_count());
  }

  Vector full_gradient(const Vector& x) const {
    Vector g = Vector::Zero(dimension());
    for (std::int64_t i = 0; i < sample_count(); ++i) add_sample_gradient(i, x, g);
    return g / static_cast<double>(sample_count());
  }

  double suboptimality(const Vector& x) const { return loss(x) - optimum_loss_; }

 private:
  static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
  static double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

  Vector solve_optimum() const {
    const Eigen::Index d = dimension();
    const auto n = static_cast<double>(sample_count());
    Vector x = Vector::Zero(d);
    for (int iter = 0; iter < 100; ++iter) {
      const Vector g = full_gradient(x);
      if (g.norm() < 1e-13) break;
      Eigen::MatrixXd h = lambda_ * Eigen::MatrixXd::Identity(d, d);
      for (std::int64_t i = 0; i < sample_count(); ++i) {
        const double s = sigmoid(labels_(i) * features_.col(i).dot(x));
        h.noalias() += (s * (1.0 - s) / n) * features_.col(i) * features_.col(i).transpose();
      }
      const Vector step = h.ldlt().solve(g);
      double t = 1.0;
      const double f0 = loss(x);
      while (t > 1e-10 && loss(x - t * step) > f0 - 0.25 * t * g.dot(step)) t *= 0.5;
      x -= t * step;
    }
    return x;
  }

  double lambda_;
  Eigen::MatrixXd features_;
  Vector labels_;
  Vector optimum_;
  double optimum_loss_ = 0.0;
};

/// Mean of per-sample gradients over `indices`.
template <ConvexProblem P>
Vector minibatch_gradient(const P& problem, const Vector& x, std::span<const std::int64_t> indices) {
  if (indices.empty()) throw Error(Errc::empty_batch, "mini-batch has no samples");
  Vector g = Vector::Zero(problem.dimension());
  const std::int64_t n = problem.sample_count();
  for (auto i : indices) {
    if (i < 0 || i >= n) throw Error(Errc::configuration, "sample index " + std::to_string(i) + " out of range");
    problem.add_sample_gradient(i, x, g);
  }
  g /= static_cast<double>(indices.size());
  return g;
}

enum class Aggregation { uniform_average, batch_weighted };

inline std::string to_string(Aggregation a) {
  return a == Aggregation::uniform_average ? "uniform_average" : "batch_weighted";
}

/// uniform_average: (1/n) sum g_i. batch_weighted: sum (b_i / sum b) g_i,
/// which equals the mean gradient over the union of the workers' batches.
inline Vector aggregate_gradients(std::span<const Vector> grads, std::span<const std::int64_t> batch_sizes,
                                  Aggregation mode) {
  if (grads.size() != batch_sizes.size()) {
    throw Error(Errc::configuration, "got " + std::to_string(grads.size()) + " gradients but " +
                                         std::to_string(batch_sizes.size()) + " batch sizes");
  }
  if (grads.empty()) throw Error(Errc::configuration, "no gradients to aggregate");
  std::int64_t total = 0;
  for (auto b : batch_sizes) {
    if (b <= 0) throw Error(Errc::configuration, "batch sizes must be positive");
    total += b;
  }
  Vector out = Vector::Zero(grads.front().size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].size() != out.size()) throw Error(Errc::configuration, "gradient dimensions differ");
    const double w = mode == Aggregation::uniform_average
                         ? 1.0 / static_cast<double>(grads.size())
                         : static_cast<double>(batch_sizes[i]) / static_cast<double>(total);
    out.noalias() += w * grads[i];
  }
  return out;
}

struct SgdConfig {
  double step_size = 0.1;
  double momentum = 0.0;
  std::int64_t n_iterations = 100;
  Aggregation aggregation = Aggregation::batch_weighted;
  std::uint64_t seed = 0;

  void validate(double mu) const {
    if (!(step_size > 0.0 && step_size * mu < 1.0)) {
      throw Error(Errc::invalid_step_size, "step size must lie in (0, 1/mu); got gamma*mu = " +
                                               std::to_string(step_size * mu));
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(Errc::configuration, "momentum must lie in [0, 1)");
    if (n_iterations < 0) throw Error(Errc::configuration, "iteration count must be non-negative");
  }
};

struct StepResult {
  Vector x;
  Vector velocity;
};

/// Heavy-ball step: v' = beta v + g, x' = x - gamma v'. An empty velocity is
/// read as zero; with beta = 0 this is plain x - gamma g.
inline StepResult sgd_step(const Vector& x, const Vector& gradient, const SgdConfig& config,
                           const Vector& velocity) {
  if (gradient.size() != x.size() || (velocity.size() != 0 && velocity.size() != x.size())) {
    throw Error(Errc::configuration, "dimension mismatch in sgd step");
  }
  StepResult r;
  r.velocity = velocity.size() == 0 ? gradient : Vector(config.momentum * velocity + gradient);
  r.x = x - config.step_size * r.velocity;
  return r;
}

/// Per-epoch batch layout for a run: a single fixed plan, or a stream of
/// plans (the last one repeats once the stream is exhausted).
class PlanSource {
 public:
  static PlanSource fixed(PartitionPlan plan) { return PlanSource({std::move(plan)}); }
  static PlanSource stream(std::vector<PartitionPlan> plans) {
    if (plans.empty()) throw Error(Errc::configuration, "plan stream is empty");
    return PlanSource(std::move(plans));
  }

  const PartitionPlan& plan_for_epoch(std::size_t epoch) const {
    return plans_[std::min(epoch, plans_.size() - 1)];
  }
  std::size_t size() const { return plans_.size(); }

 private:
  explicit PlanSource(std::vector<PartitionPlan> plans) : plans_(std::move(plans)) {}
  std::vector<PartitionPlan> plans_;
};

struct SgdTrajectory {
  std::vector<double> squared_distances;  // index j holds ||x^j - x*||^2, j = 0..J
  std::vector<double> bound_values;       // same indexing; empty unless sigma^2 was supplied
  double final_loss = 0.0;                // f(x^J) - f(x*)
};

/// (1 - gamma mu)^j d0 + gamma sigma^2 / mu.
inline double theorem1_bound(std::int64_t j, double gamma, double mu, double initial_sq_dist, double sigma_sq) {
  const double gm = gamma * mu;
  if (!(mu > 0.0) || !(gm > 0.0 && gm < 1.0)) {
    throw Error(Errc::invalid_step_size, "gamma*mu must lie in (0, 1), got " + std::to_string(gm));
  }
  if (!(sigma_sq >= 0.0) || !(initial_sq_dist >= 0.0)) {
    throw Error(Errc::configuration, "squared quantities must be non-negative");
  }
  return std::pow(1.0 - gm, static_cast<double>(j)) * initial_sq_dist + gamma * sigma_sq / mu;
}

namespace detail {

// Per-worker sampler: uniform without replacement within the worker's span,
// reshuffled each epoch and whenever the span runs out mid-epoch.
class SpanSampler {
 public:
  SpanSampler(std::uint64_t seed, std::uint64_t worker) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(worker), 0x9e3779b9u};
    rng_.seed(seq);
  }

  void reset(const SampleSpan& span) {
    pool_.resize(static_cast<std::size_t>(span.size()));
    std::iota(pool_.begin(), pool_.end(), span.start);
    reshuffle();
  }

  std::span<const std::int64_t> draw(std::int64_t count) {
    if (count > static_cast<std::int64_t>(pool_.size())) {
      throw Error(Errc::dataset_too_small, "worker span smaller than its batch");
    }
    if (cursor_ + static_cast<std::size_t>(count) > pool_.size()) reshuffle();
    std::span<const std::int64_t> out(pool_.data() + cursor_, static_cast<std::size_t>(count));
    cursor_ += static_cast<std::size_t>(count);
    return out;
  }

 private:
  void reshuffle() {
    std::shuffle(pool_.begin(), pool_.end(), rng_);
    cursor_ = 0;
  }

  std::mt19937_64 rng_;
  std::vector<std::int64_t> pool_;
  std::size_t cursor_ = 0;
};

}  // namespace detail

/// Synchronous data-parallel SGD from x0. Each epoch takes its plan from
/// `plans`, runs floor(N / sum(batches)) iterations, and every iteration
/// aggregates one mini-batch gradient per worker into a single step.
template <ConvexProblem P>
SgdTrajectory run_parallel_sgd(const P& problem, const SgdConfig& config, std::size_t n_workers,
                               const PlanSource& plans, const Vector& x0,
                               std::optional<double> sigma_sq = std::nullopt) {
  config.validate(problem.mu());
  if (n_workers == 0) throw Error(Errc::configuration, "no workers");
  if (x0.size() != problem.dimension()) throw Error(Errc::configuration, "initial point has wrong dimension");

  std::vector<detail::SpanSampler> samplers;
  samplers.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) samplers.emplace_back(config.seed, w);

  SgdTrajectory traj;
  traj.squared_distances.reserve(static_cast<std::size_t>(config.n_iterations) + 1);
  const double d0 = (x0 - problem.optimum()).squaredNorm();
  traj.squared_distances.push_back(d0);

  Vector x = x0;
  Vector velocity;
  std::vector<Vector> grads(n_workers);
  std::int64_t done = 0;
  for (std::size_t epoch = 0; done < config.n_iterations; ++epoch) {
    const PartitionPlan& plan = plans.plan_for_epoch(epoch);
    if (plan.worker_count() != n_workers) throw Error(Errc::configuration, "plan worker count mismatch");
    if (plan.dataset_size() != problem.sample_count()) {
      throw Error(Errc::configuration, "plan dataset size differs from problem sample count");
    }
    const std::int64_t iterations = plan.dataset_size() / plan.batch_total();
    if (iterations < 1) throw Error(Errc::dataset_too_small, "dataset smaller than one global batch");
    for (std::size_t w = 0; w < n_workers; ++w) samplers[w].reset(plan.sample_spans[w]);

    for (std::int64_t t = 0; t < iterations && done < config.n_iterations; ++t, ++done) {
      for (std::size_t w = 0; w < n_workers; ++w) {
        grads[w] = minibatch_gradient(problem, x, samplers[w].draw(plan.int_batches[w]));
      }
      const Vector g = aggregate_gradients(grads, plan.int_batches, config.aggregation);
      auto step = sgd_step(x, g, config, velocity);
      x = std::move(step.x);
      velocity = std::move(step.velocity);
      traj.squared_distances.push_back((x - problem.optimum()).squaredNorm());
    }
  }

  if (sigma_sq) {
    traj.bound_values.reserve(traj.squared_distances.size());
    for (std::size_t j = 0; j < traj.squared_distances.size(); ++j) {
      traj.bound_values.push_back(
          theorem1_bound(static_cast<std::int64_t>(j), config.step_size, problem.mu(), d0, *sigma_sq));
    }
  }
  traj.final_loss = problem.suboptimality(x);
  return traj;
}

/// Empirical stand-in for the gradient noise bound: the largest mean squared
/// norm of a size-`batch_size` mini-batch gradient over the probe points.
template <ConvexProblem P>
double estimate_gradient_noise(const P& problem, std::span<const Vector> probes, std::int64_t batch_size,
                               std::int64_t n_draws, std::uint64_t seed) {
  if (n_draws < 100) throw Error(Errc::configuration, "need at least 100 draws");
  if (batch_size < 1 || batch_size > problem.sample_count()) {
    throw Error(Errc::configuration, "batch size must lie in [1, sample_count]");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::int64_t> pool(static_cast<std::size_t>(problem.sample_count()));
  std::iota(pool.begin(), pool.end(), std::int64_t{0});

  double worst = 0.0;
  for (const auto& x : probes) {
    double sum = 0.0;
    for (std::int64_t d = 0; d < n_draws; ++d) {
      // partial Fisher-Yates: the first batch_size entries form a uniform subset
      for (std::int64_t k = 0; k < batch_size; ++k) {
        std::uniform_int_distribution<std::int64_t> pick(k, problem.sample_count() - 1);
        std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
      }
      sum += minibatch_gradient(problem, x, std::span<const std::int64_t>(pool.data(), batch_size)).squaredNorm();
    }
    worst = std::max(worst, sum / static_cast<double>(n_draws));
  }
  return worst;
}

enum class Sampling { with_replacement, without_replacement };

struct VarianceEstimate {
  std::int64_t m = 0;
  double variance = 0.0;
  double std_error = 0.0;  // standard error of `variance`
};

/// Variance of the mini-batch mean objective value at x, for each batch size.
template <ConvexProblem P>
std::vector<VarianceEstimate> verify_lemma1_variance(const P& problem, const Vector& x,
                                                     std::span<const std::int64_t> m_values, std::int64_t n_draws,
                                                     std::uint64_t seed,
                                                     Sampling sampling = Sampling::with_replacement) {
  if (n_draws < 2) throw Error(Errc::configuration, "need at least two draws");
  const std::int64_t n = problem.sample_count();
  for (std::size_t i = 0; i < m_values.size(); ++i) {
    if (m_values[i] < 1) throw Error(Errc::configuration, "batch sizes must be positive");
    if (i > 0 && m_values[i] <= m_values[i - 1]) throw Error(Errc::configuration, "batch sizes must increase");
    if (sampling == Sampling::without_replacement && m_values[i] > n) {
      throw Error(Errc::configuration, "batch larger than the dataset");
    }
  }

  std::vector<double> values(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] = problem.sample_loss(i, x);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> any(0, n - 1);
  std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), std::int64_t{0});
  std::vector<std::int64_t> chosen;
  std::vector<double> means(static_cast<std::size_t>(n_draws));

  std::vector<VarianceEstimate> out;
  for (auto m : m_values) {
    for (auto& mean : means) {
      double sum = 0.0;
      if (sampling == Sampling::with_replacement) {
        for (std::int64_t k = 0; k < m; ++k) sum += values[static_cast<std::size_t>(any(rng))];
      } else {
        for (std::int64_t k = 0; k < m; ++k) {
          std::uniform_int_distribution<std::int64_t> pick(k, n - 1);
          std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
        }
        chosen.assign(pool.begin(), pool.begin() + m);
        std::sort(chosen.begin(), chosen.end());
        for (auto i : chosen) sum += values[static_cast<std::size_t>(i)];
      }
      mean = sum / static_cast<double>(m);
    }
    // shifted by the first draw, so identical means give exactly zero
    const double shift = means.front();
    double shifted_sum = 0.0;
    for (double v : means) shifted_sum += v - shift;
    const double offset = shifted_sum / static_cast<double>(n_draws);
    double ss = 0.0;
    for (double v : means) ss += (v - shift - offset) * (v - shift - offset);
    const double variance = ss / static_cast<double>(n_draws - 1);
    double spread = 0.0;
    for (double v : means) {
      const double dev = (v - shift - offset) * (v - shift - offset) - variance;
      spread += dev * dev;
    }
    const double se = std::sqrt(spread / static_cast<double>(n_draws - 1) / static_cast<double>(n_draws));
    out.push_back({m, variance, se});
  }
  return out;
}

/// Seed-averaged squared-distance curve with per-iteration standard errors.
struct TrajectoryStats {
  std::vector<double> mean;
  std::vector<double> std_error;
  std::vector<double> final_losses;  // one per seed, seed order
  double final_loss_mean = 0.0;
  double final_loss_se = 0.0;
};

/// Runs seeds seed_base, seed_base+1, ... in parallel and reduces the
/// results in seed order, so the output does not depend on thread count.
template <ConvexProblem P>
TrajectoryStats monte_carlo(const P& problem, SgdConfig config, std::size_t n_workers, const PlanSource& plans,
                            const Vector& x0, std::int64_t n_seeds, std::uint64_t seed_base,
                            unsigned n_threads = 0) {
  if (n_seeds < 2) throw Error(Errc::configuration, "need at least two seeds");
  config.validate(problem.mu());
  std::vector<SgdTrajectory> runs(static_cast<std::size_t>(n_seeds));

  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(n_seeds));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::int64_t s = t; s < n_seeds; s += n_threads) {
          SgdConfig c = config;
          c.seed = seed_base + static_cast<std::uint64_t>(s);
          runs[static_cast<std::size_t>(s)] = run_parallel_sgd(problem, c, n_workers, plans, x0);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const std::size_t len = runs.front().squared_distances.size();
  TrajectoryStats out;
  out.mean.assign(len, 0.0);
  out.std_error.assign(len, 0.0);
  const auto count = static_cast<double>(n_seeds);
  for (const auto& r : runs) {
    for (std::size_t j = 0; j < len; ++j) out.mean[j] += r.squared_distances[j];
    out.final_losses.push_back(r.final_loss);
  }
  for (auto& m : out.mean) m /= count;
  for (const auto& r : runs) {
    for (std::size_t j = 0; j < len; ++j) {
      const double dev = r.squared_distances[j] - out.mean[j];
      out.std_error[j] += dev * dev;
    }
  }
  for (auto& se : out.std_error) se = std::sqrt(se / (count - 1.0) / count);

  out.final_loss_mean = std::accumulate(out.final_losses.begin(), out.final_losses.end(), 0.0) / count;
  double ss = 0.0;
  for (double v : out.final_losses) ss += (v - out.final_loss_mean) * (v - out.final_loss_mean);
  out.final_loss_se = std::sqrt(ss / (count - 1.0) / count);
  return out;
}

}  // namespace dbs::sgd
