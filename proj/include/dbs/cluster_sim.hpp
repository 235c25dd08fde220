#pragma once

// Deterministic epoch-level timing simulation of synchronous data-parallel
// training on a heterogeneous cluster. Each epoch is decomposed into
// per-worker compute time, per-worker idle time spent waiting for the
// slowest worker, and synchronization time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dbs/core.hpp"
#include "dbs/error.hpp"

namespace dbs::sim {

struct DisturbanceEvent {
  enum class Kind { additive, multiplicative };

  int start_epoch = 0;
  std::optional<int> end_epoch;  // exclusive; nullopt = until training ends
  Kind kind = Kind::additive;
  double value = 0.0;  // seconds per epoch (additive) or cost factor (multiplicative)

  static DisturbanceEvent additive(int start, double extra_seconds, std::optional<int> end = std::nullopt) {
    return {start, end, Kind::additive, extra_seconds};
  }
  static DisturbanceEvent multiplicative(int start, double factor, std::optional<int> end = std::nullopt) {
    return {start, end, Kind::multiplicative, factor};
  }

  bool active(int epoch) const { return epoch >= start_epoch && (!end_epoch || epoch < *end_epoch); }

  void validate() const {
    if (start_epoch < 0) throw Error(Errc::configuration, "disturbance start epoch must be non-negative");
    if (end_epoch && *end_epoch <= start_epoch) {
      throw Error(Errc::configuration, "disturbance end epoch must follow its start");
    }
    if (kind == Kind::additive && !(value >= 0.0)) {
      throw Error(Errc::configuration, "additive disturbance must be non-negative");
    }
    if (kind == Kind::multiplicative && !(value >= 1.0)) {
      throw Error(Errc::configuration, "cost multiplier must be at least 1");
    }
  }

  friend bool operator==(const DisturbanceEvent&, const DisturbanceEvent&) = default;
};

struct WorkerProfile {
  std::size_t worker_id = 0;
  double base_cost = 0.0;  // seconds per sample
  double per_iteration_overhead = 0.0;
  std::vector<DisturbanceEvent> disturbances;

  void validate() const {
    if (!(base_cost > 0.0) || !std::isfinite(base_cost)) {
      throw Error(Errc::configuration, "worker " + std::to_string(worker_id) + ": base cost must be positive");
    }
    if (!(per_iteration_overhead >= 0.0)) {
      throw Error(Errc::configuration, "worker " + std::to_string(worker_id) + ": overhead must be non-negative");
    }
    for (std::size_t i = 0; i < disturbances.size(); ++i) {
      disturbances[i].validate();
      if (i == 0) continue;
      const auto& prev = disturbances[i - 1];
      const auto& cur = disturbances[i];
      if (cur.start_epoch < prev.start_epoch) {
        throw Error(Errc::configuration, "worker " + std::to_string(worker_id) + ": disturbances not sorted");
      }
      if (!prev.end_epoch || *prev.end_epoch > cur.start_epoch) {
        throw Error(Errc::configuration, "worker " + std::to_string(worker_id) + ": disturbances overlap");
      }
    }
  }

  double effective_cost(int epoch) const {
    double cost = base_cost;
    for (const auto& d : disturbances) {
      if (d.kind == DisturbanceEvent::Kind::multiplicative && d.active(epoch)) cost *= d.value;
    }
    return cost;
  }

  double extra_seconds(int epoch) const {
    double extra = 0.0;
    for (const auto& d : disturbances) {
      if (d.kind == DisturbanceEvent::Kind::additive && d.active(epoch)) extra += d.value;
    }
    return extra;
  }
};

enum class StrategyKind { fixed_ssgd, model_averaging, one_shot, dbs };

inline std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::fixed_ssgd: return "fixed_ssgd";
    case StrategyKind::model_averaging: return "model_averaging";
    case StrategyKind::one_shot: return "one_shot";
    case StrategyKind::dbs: return "dbs";
  }
  return "unknown";
}

inline std::optional<StrategyKind> strategy_kind_from_string(const std::string& s) {
  if (s == "fixed_ssgd") return StrategyKind::fixed_ssgd;
  if (s == "model_averaging") return StrategyKind::model_averaging;
  if (s == "one_shot") return StrategyKind::one_shot;
  if (s == "dbs") return StrategyKind::dbs;
  return std::nullopt;
}

/// Default affine sync cost: about 7% of epoch time for the four-worker scenarios.
inline constexpr double kDefaultSyncCostPerRound = 0.01;
inline constexpr double kDefaultSyncCostPerWorker = 0.001;

struct StrategyConfig {
  StrategyKind kind = StrategyKind::fixed_ssgd;
  int sync_interval = 1;  // iterations between averaging rounds (model_averaging)
  std::int64_t total_budget = 0;
  double sync_cost_per_round = kDefaultSyncCostPerRound;
  double sync_cost_per_worker = kDefaultSyncCostPerWorker;
  bool sync_at_epoch_end = false;  // model_averaging: extra round closing each epoch
  double perf_smoothing = 0.0;     // dbs: EMA factor on performance estimates
  std::string label;               // optional display name

  std::string name() const {
    if (!label.empty()) return label;
    if (kind == StrategyKind::model_averaging) return "model_averaging_step" + std::to_string(sync_interval);
    return to_string(kind);
  }

  void validate(std::size_t n_workers) const {
    if (sync_interval < 1) throw Error(Errc::configuration, "sync interval must be at least 1");
    if ((kind == StrategyKind::fixed_ssgd || kind == StrategyKind::dbs) && sync_interval != 1) {
      throw Error(Errc::configuration, to_string(kind) + " synchronizes every iteration (sync_interval = 1)");
    }
    if (total_budget < static_cast<std::int64_t>(n_workers)) {
      throw Error(Errc::budget_too_small, "total batch " + std::to_string(total_budget) + " is below worker count " +
                                              std::to_string(n_workers));
    }
    if (!(sync_cost_per_round >= 0.0) || !(sync_cost_per_worker >= 0.0)) {
      throw Error(Errc::configuration, "sync costs must be non-negative");
    }
    if (!(perf_smoothing >= 0.0 && perf_smoothing < 1.0)) {
      throw Error(Errc::configuration, "smoothing factor must lie in [0, 1)");
    }
  }
};

struct EpochStats {
  int epoch = 0;
  std::vector<double> per_worker_gpu;
  std::vector<double> per_worker_wait;
  double sync_time = 0.0;
  double epoch_wall_time = 0.0;
  std::int64_t iterations = 0;
  std::int64_t sync_rounds = 0;
  PartitionPlan plan;

  friend bool operator==(const EpochStats& a, const EpochStats& b) {
    return a.epoch == b.epoch && a.per_worker_gpu == b.per_worker_gpu && a.per_worker_wait == b.per_worker_wait &&
           a.sync_time == b.sync_time && a.epoch_wall_time == b.epoch_wall_time && a.iterations == b.iterations &&
           a.sync_rounds == b.sync_rounds && a.plan.int_batches == b.plan.int_batches &&
           a.plan.ranges == b.plan.ranges && a.plan.sample_spans == b.plan.sample_spans;
  }
};

/// Linear compute model: cost(epoch) * samples + overhead * iterations + additive disturbances.
inline double epoch_gpu_time(const WorkerProfile& profile, std::int64_t samples_assigned, std::int64_t iterations,
                             int epoch) {
  return profile.effective_cost(epoch) * static_cast<double>(samples_assigned) +
         profile.per_iteration_overhead * static_cast<double>(iterations) + profile.extra_seconds(epoch);
}

inline double sync_time_for_epoch(const StrategyConfig& config, std::size_t n_workers,
                                  std::int64_t sync_rounds_this_epoch) {
  return static_cast<double>(sync_rounds_this_epoch) *
         (config.sync_cost_per_round + config.sync_cost_per_worker * static_cast<double>(n_workers));
}

/// Every worker runs the same number of iterations: floor(N / sum(batches)), drop-last.
inline std::int64_t iterations_per_epoch(const PartitionPlan& plan) {
  const auto total = plan.batch_total();
  if (total <= 0) throw Error(Errc::empty_partition, "plan has no samples per iteration");
  return plan.dataset_size() / total;
}

inline std::int64_t sync_rounds_for_epoch(const StrategyConfig& config, std::int64_t iterations, bool final_epoch) {
  switch (config.kind) {
    case StrategyKind::fixed_ssgd: return iterations;
    case StrategyKind::dbs: return iterations + 1;  // +1: gathering performance estimates
    case StrategyKind::model_averaging: {
      std::int64_t rounds = iterations / config.sync_interval;
      if (config.sync_at_epoch_end && iterations % config.sync_interval != 0) ++rounds;
      return rounds;
    }
    case StrategyKind::one_shot: return final_epoch ? 1 : 0;
  }
  return 0;
}

/// Simulates one epoch under `plan`. `slowdown`, if given, scales each
/// worker's compute time (timing jitter).
inline EpochStats run_epoch(std::span<const WorkerProfile> profiles, const PartitionPlan& plan,
                            const StrategyConfig& config, int epoch, bool final_epoch = false,
                            std::span<const double> slowdown = {}) {
  const std::size_t n = profiles.size();
  if (n == 0 || plan.worker_count() != n || plan.sample_spans.size() != n) {
    throw Error(Errc::configuration, "plan covers " + std::to_string(plan.worker_count()) + " workers but " +
                                         std::to_string(n) + " profiles were given");
  }
  if (!slowdown.empty() && slowdown.size() != n) throw Error(Errc::configuration, "slowdown length mismatch");

  EpochStats stats;
  stats.epoch = epoch;
  stats.plan = plan;
  stats.iterations = iterations_per_epoch(plan);
  stats.per_worker_gpu.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = epoch_gpu_time(profiles[i], stats.iterations * plan.int_batches[i], stats.iterations, epoch);
    if (!slowdown.empty()) t *= slowdown[i];
    stats.per_worker_gpu[i] = t;
  }
  const double slowest = *std::max_element(stats.per_worker_gpu.begin(), stats.per_worker_gpu.end());
  stats.per_worker_wait.resize(n);
  for (std::size_t i = 0; i < n; ++i) stats.per_worker_wait[i] = slowest - stats.per_worker_gpu[i];

  stats.sync_rounds = sync_rounds_for_epoch(config, stats.iterations, final_epoch);
  stats.sync_time = sync_time_for_epoch(config, n, stats.sync_rounds);
  stats.epoch_wall_time = slowest + stats.sync_time;
  return stats;
}

struct SimOptions {
  double timing_jitter = 0.0;  // std-dev of log compute-time noise per worker-epoch
};

inline std::vector<WorkerProfile> make_profiles(std::span<const double> costs, double per_iteration_overhead = 0.0) {
  std::vector<WorkerProfile> out;
  out.reserve(costs.size());
  for (std::size_t i = 0; i < costs.size(); ++i) out.push_back({i, costs[i], per_iteration_overhead, {}});
  return out;
}

/// Runs `n_epochs` epochs. For dbs, epoch e >= 1 is planned from epoch e-1's
/// measured compute times; every other strategy keeps the even plan.
inline std::vector<EpochStats> run_training(std::span<const WorkerProfile> profiles, const StrategyConfig& config,
                                            std::int64_t dataset_size, int n_epochs, std::uint64_t seed,
                                            const SimOptions& options = {}) {
  if (n_epochs < 1) throw Error(Errc::configuration, "need at least one epoch");
  if (profiles.empty()) throw Error(Errc::configuration, "no workers");
  for (const auto& p : profiles) p.validate();
  config.validate(profiles.size());
  if (dataset_size < config.total_budget) {
    throw Error(Errc::dataset_too_small, "dataset smaller than one global batch");
  }
  if (!(options.timing_jitter >= 0.0)) throw Error(Errc::configuration, "timing jitter must be non-negative");

  const std::size_t n = profiles.size();
  DynamicBatchPlanner planner(n, config.total_budget, dataset_size, config.perf_smoothing);
  PartitionPlan plan = planner.initial_plan();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> slowdown;

  std::vector<EpochStats> out;
  out.reserve(static_cast<std::size_t>(n_epochs));
  for (int e = 0; e < n_epochs; ++e) {
    if (options.timing_jitter > 0.0) {
      slowdown.resize(n);
      const double s = options.timing_jitter;
      for (auto& f : slowdown) f = std::exp(s * normal(rng) - 0.5 * s * s);
    }
    out.push_back(run_epoch(profiles, plan, config, e, e + 1 == n_epochs, slowdown));
    if (config.kind == StrategyKind::dbs) {
      plan = planner.next(plan, out.back().per_worker_gpu);
    } else {
      plan.epoch = e + 1;
    }
  }
  return out;
}

struct CumulativeTimes {
  double total_Ta = 0.0;
  std::vector<double> total_gpu_per_worker;
  double total_wait = 0.0;
};

inline CumulativeTimes cumulative_times(std::span<const EpochStats> stats) {
  if (stats.empty()) throw Error(Errc::configuration, "no epochs to accumulate");
  CumulativeTimes out;
  out.total_gpu_per_worker.assign(stats.front().per_worker_gpu.size(), 0.0);
  for (const auto& s : stats) {
    out.total_Ta += s.epoch_wall_time;
    for (std::size_t i = 0; i < s.per_worker_gpu.size() && i < out.total_gpu_per_worker.size(); ++i) {
      out.total_gpu_per_worker[i] += s.per_worker_gpu[i];
    }
    for (double w : s.per_worker_wait) out.total_wait += w;
  }
  return out;
}

/// max/min per-worker compute time for one epoch.
inline double gpu_imbalance(const EpochStats& s) {
  const auto [lo, hi] = std::minmax_element(s.per_worker_gpu.begin(), s.per_worker_gpu.end());
  if (*lo <= 0.0) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

}  // namespace dbs::sim
