// Four workers with a 1:2 speed spread. Prints the plan DBS converges to
// and the per-epoch compute times of fixed vs dynamic batching.

#include <cstdio>

#include "dbs/dbs.hpp"

int main() {
  const auto rounded = dbs::round_twice(std::vector<double>{13.7, 16.5, 19.6, 14.2}, 64);
  std::printf("round_twice([13.7, 16.5, 19.6, 14.2], 64) = [%lld, %lld, %lld, %lld]\n",
              static_cast<long long>(rounded[0]), static_cast<long long>(rounded[1]),
              static_cast<long long>(rounded[2]), static_cast<long long>(rounded[3]));

  const auto profiles = dbs::sim::make_profiles(dbs::scenario::geometric_costs(4, 0.001), 0.0);
  dbs::sim::StrategyConfig fixed;
  fixed.kind = dbs::sim::StrategyKind::fixed_ssgd;
  fixed.total_budget = 512;
  auto dynamic = fixed;
  dynamic.kind = dbs::sim::StrategyKind::dbs;

  const auto a = dbs::sim::run_training(profiles, fixed, 50000, 8, 1);
  const auto b = dbs::sim::run_training(profiles, dynamic, 50000, 8, 1);
  std::printf("%5s  %10s  %10s  %s\n", "epoch", "fixed T_a", "dbs T_a", "dbs batches");
  for (std::size_t e = 0; e < a.size(); ++e) {
    std::printf("%5zu  %10.3f  %10.3f  [", e, a[e].epoch_wall_time, b[e].epoch_wall_time);
    for (std::size_t i = 0; i < b[e].plan.int_batches.size(); ++i) {
      std::printf("%s%lld", i ? ", " : "", static_cast<long long>(b[e].plan.int_batches[i]));
    }
    std::printf("]\n");
  }
  const auto ta = dbs::sim::cumulative_times(a).total_Ta;
  const auto tb = dbs::sim::cumulative_times(b).total_Ta;
  std::printf("savings: %.2f%%\n", dbs::report::savings_percent(tb, ta));
}
