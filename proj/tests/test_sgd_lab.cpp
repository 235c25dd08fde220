#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "dbs/core.hpp"
#include "dbs/sgd_checks.hpp"
#include "dbs/sgd_lab.hpp"

namespace {

using namespace dbs::sgd;

QuadraticProblem quadratic(Eigen::Index d, double mu, double noise, std::int64_t n, std::uint64_t seed = 1) {
  return QuadraticProblem({d, mu, noise, n}, seed);
}

std::vector<std::int64_t> all_indices(std::int64_t n) {
  std::vector<std::int64_t> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), std::int64_t{0});
  return v;
}

static_assert(ConvexProblem<QuadraticProblem>);
static_assert(ConvexProblem<LogisticProblem>);

TEST(MinibatchGradient, ZeroAtOptimumWithoutNoise) {
  const auto p = quadratic(6, 2.0, 0.0, 20);
  const std::vector<std::int64_t> idx{3, 7, 11};
  EXPECT_EQ(minibatch_gradient(p, p.optimum(), idx).norm(), 0.0);
}

TEST(MinibatchGradient, FullBatchIsExact) {
  const auto p = quadratic(5, 1.5, 1.0, 64);
  const Vector x = p.optimum() + Vector::Constant(5, 0.7);
  const Vector g = minibatch_gradient(p, x, all_indices(64));
  EXPECT_LE((g - p.full_gradient(x)).norm(), 1e-12);
}

TEST(MinibatchGradient, SingletonAverageIsUnbiased) {
  const auto p = quadratic(4, 1.0, 2.0, 50);
  const Vector x = Vector::Constant(4, 3.0);
  Vector sum = Vector::Zero(4);
  for (std::int64_t i = 0; i < 50; ++i) sum += minibatch_gradient(p, x, std::vector<std::int64_t>{i});
  EXPECT_LE((sum / 50.0 - p.full_gradient(x)).norm(), 1e-12);
}

TEST(MinibatchGradient, ExhaustiveSubsetAverageIsUnbiased) {
  for (std::int64_t n : {5, 9, 12}) {
    const auto p = quadratic(3, 0.8, 1.3, n, static_cast<std::uint64_t>(n));
    const auto lp = LogisticProblem({3, n, 0.2, 1.0}, 4);
    const Vector x = Vector::Constant(3, -0.4);
    for (std::int64_t m = 1; m <= 3; ++m) {
      Vector acc_q = Vector::Zero(3);
      Vector acc_l = Vector::Zero(3);
      std::int64_t count = 0;
      std::vector<bool> select(static_cast<std::size_t>(n), false);
      std::fill(select.begin(), select.begin() + m, true);
      do {
        std::vector<std::int64_t> idx;
        for (std::int64_t i = 0; i < n; ++i) {
          if (select[static_cast<std::size_t>(i)]) idx.push_back(i);
        }
        acc_q += minibatch_gradient(p, x, idx);
        acc_l += minibatch_gradient(lp, x, idx);
        ++count;
      } while (std::prev_permutation(select.begin(), select.end()));
      EXPECT_LE((acc_q / static_cast<double>(count) - p.full_gradient(x)).norm(), 1e-10);
      EXPECT_LE((acc_l / static_cast<double>(count) - lp.full_gradient(x)).norm(), 1e-10);
    }
  }
}

TEST(MinibatchGradient, EmptyBatch) {
  const auto p = quadratic(2, 1.0, 1.0, 4);
  try {
    minibatch_gradient(p, p.optimum(), std::vector<std::int64_t>{});
    FAIL();
  } catch (const dbs::Error& e) {
    EXPECT_EQ(e.code(), dbs::Errc::empty_batch);
  }
}

TEST(AggregateGradients, Examples) {
  const std::vector<Vector> grads{Vector::Constant(3, 1.0), Vector::Constant(3, 4.0)};
  const std::vector<std::int64_t> equal{5, 5};
  const Vector u = aggregate_gradients(grads, equal, Aggregation::uniform_average);
  const Vector w = aggregate_gradients(grads, equal, Aggregation::batch_weighted);
  EXPECT_LE((u - w).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(u(0), 2.5);

  const Vector g = Vector::LinSpaced(3, -1.0, 2.0);
  const std::vector<Vector> same{g, g};
  const std::vector<std::int64_t> sizes{2, 9};
  EXPECT_LE((aggregate_gradients(same, sizes, Aggregation::batch_weighted) - g).norm(), 1e-15);
  EXPECT_LE((aggregate_gradients(same, sizes, Aggregation::uniform_average) - g).norm(), 1e-15);
}

TEST(AggregateGradients, WeightedRecombinesUnionBatch) {
  const auto p = quadratic(7, 1.0, 1.0, 40);
  const Vector x = Vector::Constant(7, 0.3);
  const std::vector<std::int64_t> a{0, 9};
  const std::vector<std::int64_t> b{3, 4, 17, 21, 30, 39};
  std::vector<std::int64_t> both = a;
  both.insert(both.end(), b.begin(), b.end());
  const std::vector<Vector> grads{minibatch_gradient(p, x, a), minibatch_gradient(p, x, b)};
  const std::vector<std::int64_t> sizes{2, 6};
  const Vector agg = aggregate_gradients(grads, sizes, Aggregation::batch_weighted);
  const Vector direct = minibatch_gradient(p, x, both);
  EXPECT_LE((agg - direct).norm(), 1e-12 * direct.norm());
}

TEST(AggregateGradients, Errors) {
  const std::vector<Vector> grads{Vector::Zero(2)};
  EXPECT_THROW(aggregate_gradients(grads, std::vector<std::int64_t>{1, 2}, Aggregation::batch_weighted), dbs::Error);
  EXPECT_THROW(aggregate_gradients(grads, std::vector<std::int64_t>{0}, Aggregation::batch_weighted), dbs::Error);
}

TEST(SgdStep, Examples) {
  SgdConfig c;
  c.step_size = 0.5;
  const auto still = sgd_step(Vector::Ones(2), Vector::Zero(2), c, Vector());
  EXPECT_EQ(still.x, Vector::Ones(2));

  const auto one = sgd_step(Vector::Constant(1, 2.0), Vector::Constant(1, 1.0), c, Vector());
  EXPECT_DOUBLE_EQ(one.x(0), 1.5);

  c.step_size = 0.1;
  c.momentum = 0.5;
  const Vector g = Vector::Constant(1, 1.0);
  const auto s1 = sgd_step(Vector::Zero(1), g, c, Vector());
  EXPECT_NEAR(s1.x(0), -0.1, 1e-15);
  EXPECT_DOUBLE_EQ(s1.velocity(0), 1.0);
  const auto s2 = sgd_step(s1.x, g, c, s1.velocity);
  EXPECT_DOUBLE_EQ(s2.velocity(0), 1.5);
  EXPECT_NEAR(s2.x(0), -0.25, 1e-15);
}

TEST(SgdConfig, StepSizeRange) {
  SgdConfig c;
  c.step_size = 1.5;
  try {
    c.validate(1.0);
    FAIL();
  } catch (const dbs::Error& e) {
    EXPECT_EQ(e.code(), dbs::Errc::invalid_step_size);
  }
  c.step_size = 0.0;
  EXPECT_THROW(c.validate(1.0), dbs::Error);
  c.step_size = 0.9;
  EXPECT_NO_THROW(c.validate(1.0));
}

TEST(ConvergenceBound, Examples) {
  EXPECT_DOUBLE_EQ(theorem1_bound(0, 0.3, 1.0, 7.5, 0.0), 7.5);
  EXPECT_NEAR(theorem1_bound(100000, 0.3, 2.0, 7.5, 4.0), 0.3 * 4.0 / 2.0, 1e-15);
  const double mu = 1.0;
  EXPECT_NEAR(theorem1_bound(3, 0.5 / mu, mu, 8.0, mu), 1.5, 1e-15);
  EXPECT_NEAR(theorem1_bound(3, 0.25, 2.0, 8.0, 2.0), 1.25, 1e-15);
  EXPECT_THROW(theorem1_bound(1, 1.5, 1.0, 1.0, 1.0), dbs::Error);
}

TEST(RunParallelSgd, DeterministicFullBatchDecay) {
  const auto p = quadratic(6, 2.0, 0.0, 64);
  SgdConfig c;
  c.step_size = 0.15;  // gamma mu = 0.3
  c.n_iterations = 25;
  const Vector x0 = p.optimum() + Vector::LinSpaced(6, -1.0, 2.0);
  const double d0 = (x0 - p.optimum()).squaredNorm();
  const auto traj = run_parallel_sgd(p, c, 1, PlanSource::fixed(dbs::even_plan(1, 64, 64)), x0, 0.0);
  ASSERT_EQ(traj.squared_distances.size(), 26u);
  for (std::size_t j = 0; j < traj.squared_distances.size(); ++j) {
    const double expected = std::pow(0.7, 2.0 * static_cast<double>(j)) * d0;
    EXPECT_NEAR(traj.squared_distances[j], expected, 1e-12 * d0);
    EXPECT_LE(traj.squared_distances[j], traj.bound_values[j] + 1e-12);
    if (j > 0) EXPECT_LT(traj.squared_distances[j], traj.squared_distances[j - 1]);
  }
}

TEST(RunParallelSgd, NoiselessDescentWithMinibatches) {
  const auto p = quadratic(4, 1.0, 0.0, 256);
  SgdConfig c;
  c.step_size = 0.6;
  c.n_iterations = 40;
  c.seed = 3;
  const auto plan = dbs::make_plan({5, 3, 7, 1}, 256, 0);
  const auto traj = run_parallel_sgd(p, c, 4, PlanSource::fixed(plan), Vector::Constant(4, 5.0));
  for (std::size_t j = 1; j < traj.squared_distances.size(); ++j) {
    EXPECT_LT(traj.squared_distances[j], traj.squared_distances[j - 1]);
  }
}

TEST(RunParallelSgd, SameSeedSameTrajectory) {
  const auto p = quadratic(8, 1.0, 1.0, 512);
  SgdConfig c;
  c.step_size = 0.3;
  c.momentum = 0.5;
  c.n_iterations = 50;
  c.seed = 77;
  const auto plans = PlanSource::stream({dbs::make_plan({40, 30, 20, 10}, 512, 0), dbs::make_plan({10, 20, 30, 40}, 512, 1)});
  const auto a = run_parallel_sgd(p, c, 4, plans, Vector::Zero(8));
  const auto b = run_parallel_sgd(p, c, 4, plans, Vector::Zero(8));
  EXPECT_EQ(a.squared_distances, b.squared_distances);
}

TEST(RunParallelSgd, PlateauGrowsWithStepSize) {
  const auto p = quadratic(10, 1.0, 1.0, 1024);
  const auto plans = PlanSource::fixed(dbs::even_plan(4, 16, 1024));
  auto plateau = [&](double gm) {
    SgdConfig c;
    c.step_size = gm;
    c.n_iterations = 300;
    const auto stats = monte_carlo(p, c, 4, plans, p.optimum(), 50, 10);
    double tail = 0.0;
    for (std::size_t j = 200; j < stats.mean.size(); ++j) tail += stats.mean[j];
    return tail / static_cast<double>(stats.mean.size() - 200);
  };
  EXPECT_GT(plateau(0.9), plateau(0.1));
}

TEST(RunParallelSgd, RejectsMismatchedPlan) {
  const auto p = quadratic(3, 1.0, 1.0, 100);
  SgdConfig c;
  c.step_size = 0.5;
  c.n_iterations = 5;
  EXPECT_THROW(run_parallel_sgd(p, c, 2, PlanSource::fixed(dbs::even_plan(2, 10, 90)), Vector::Zero(3)), dbs::Error);
  EXPECT_THROW(run_parallel_sgd(p, c, 3, PlanSource::fixed(dbs::even_plan(2, 10, 100)), Vector::Zero(3)), dbs::Error);
}

TEST(EstimateGradientNoise, ZeroAtOptimumWithoutNoise) {
  const auto p = quadratic(5, 1.0, 0.0, 128);
  const std::vector<Vector> probes{p.optimum()};
  EXPECT_EQ(estimate_gradient_noise(p, probes, 8, 200, 1), 0.0);
}

TEST(EstimateGradientNoise, DecreasesWithBatchSize) {
  const auto p = quadratic(5, 1.0, 1.0, 1024);
  const std::vector<Vector> probes{p.optimum()};
  const double small = estimate_gradient_noise(p, probes, 4, 10000, 2);
  const double large = estimate_gradient_noise(p, probes, 32, 10000, 2);
  EXPECT_LT(large, small);
}

TEST(EstimateGradientNoise, GrowsAwayFromOptimumExactlyWithoutNoise) {
  const auto p = quadratic(5, 1.5, 0.0, 64);
  for (double r : {0.5, 1.0, 3.0}) {
    const Vector x = p.optimum() + Vector::Constant(5, r);
    const std::vector<Vector> probes{x};
    const double expected = 1.5 * 1.5 * (x - p.optimum()).squaredNorm();
    EXPECT_NEAR(estimate_gradient_noise(p, probes, 8, 100, 3), expected, 1e-9 * expected);
  }
}

TEST(MinibatchVariance, FullBatchWithoutReplacementIsZero) {
  const auto p = quadratic(3, 1.0, 1.0, 32);
  const std::vector<std::int64_t> m{32};
  const auto v = verify_lemma1_variance(p, Vector::Zero(3), m, 500, 4, Sampling::without_replacement);
  EXPECT_EQ(v[0].variance, 0.0);
}

TEST(MinibatchVariance, ConstantLossesHaveZeroVariance) {
  const auto p = quadratic(3, 1.0, 0.0, 32);
  const std::vector<std::int64_t> m{1, 2, 8};
  for (const auto& v : verify_lemma1_variance(p, Vector::Ones(3), m, 500, 4)) EXPECT_EQ(v.variance, 0.0);
}

TEST(MinibatchVariance, HalvesWhenBatchDoubles) {
  const auto p = quadratic(10, 1.0, 1.0, 1024);
  const std::vector<std::int64_t> m{3, 6};
  const auto v = verify_lemma1_variance(p, Vector::Zero(10), m, 100000, 5);
  EXPECT_NEAR(v[0].variance / v[1].variance, 2.0, 0.2);
}

TEST(LogisticProblem, OptimumIsStationary) {
  const LogisticProblem p({5, 400, 0.1, 1.0}, 9);
  EXPECT_LE(p.full_gradient(p.optimum()).norm(), 1e-10);
  EXPECT_NEAR(p.suboptimality(p.optimum()), 0.0, 1e-14);
  EXPECT_GT(p.suboptimality(p.optimum() + Vector::Constant(5, 0.1)), 0.0);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResult) {
  const auto p = quadratic(6, 1.0, 1.0, 256);
  SgdConfig c;
  c.step_size = 0.4;
  c.n_iterations = 30;
  const auto plans = PlanSource::fixed(dbs::make_plan({9, 5, 2}, 256, 0));
  const Vector x0 = Vector::Constant(6, 2.0);
  const auto a = monte_carlo(p, c, 3, plans, x0, 17, 100, 1);
  const auto b = monte_carlo(p, c, 3, plans, x0, 17, 100, 4);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.final_losses, b.final_losses);
}

TEST(Checks, BoundHoldsOnSmallRun) {
  const auto p = quadratic(10, 1.0, 1.0, 1024);
  const Vector x0 = p.optimum() + Vector::Constant(10, 4.0 / std::sqrt(10.0));
  const auto r = check_convergence_bound(p, 0.5, 4, PlanSource::fixed(dbs::even_plan(4, 32, 1024)), x0, 60, 200, 300, 1);
  EXPECT_TRUE(r.passed) << "worst margin " << r.worst_margin;
  EXPECT_NEAR(r.initial_sq_dist, 16.0, 1e-9);
}

TEST(Checks, VarianceSweepIsMonotone) {
  const auto p = quadratic(10, 1.0, 1.0, 1024);
  const std::vector<std::int64_t> m{1, 4, 16, 64};
  const auto r = check_variance_decay(p, p.optimum(), m, 20000, 3, 0.10);
  EXPECT_TRUE(r.monotone);
  ASSERT_EQ(r.estimates.size(), 4u);
  for (std::size_t k = 1; k < 4; ++k) EXPECT_LT(r.estimates[k].variance, r.estimates[k - 1].variance);
}

}  // namespace
