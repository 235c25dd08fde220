#pragma once

// Scheduler mathematics for dynamic batch sizing: per-worker performance
// estimates, proportional batch allocation, the floor-then-round-up
// integerization ("rounding twice") and the resulting dataset partition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbs/error.hpp"

namespace dbs {

/// Exact rational number. Partition boundaries are kept as ratios of
/// integer batch sums so contiguity holds bit-exactly.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Fraction& a, const Fraction& b) {
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator<(const Fraction& a, const Fraction& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
};

struct FractionRange {
  Fraction lower;
  Fraction upper;

  Fraction width() const {
    // Ranges produced by partition_ranges share one denominator.
    if (lower.den == upper.den) return {upper.num - lower.num, upper.den};
    return {upper.num * lower.den - lower.num * upper.den, lower.den * upper.den};
  }
  friend bool operator==(const FractionRange&, const FractionRange&) = default;
};

/// Half-open sample index interval [start, end).
struct SampleSpan {
  std::int64_t start = 0;
  std::int64_t end = 0;

  std::int64_t size() const { return end - start; }
  friend bool operator==(const SampleSpan&, const SampleSpan&) = default;
};

struct PerfEstimate {
  std::size_t worker_id = 0;
  double value = 0.0;  // dataset share processed per second
};

struct BatchAllocation {
  std::vector<double> fractions;
  std::vector<double> real_batches;
  std::vector<std::int64_t> int_batches;
  std::int64_t total_budget = 0;
};

struct PartitionPlan {
  int epoch = 0;
  std::vector<std::int64_t> int_batches;
  std::vector<FractionRange> ranges;
  std::vector<SampleSpan> sample_spans;

  std::size_t worker_count() const { return int_batches.size(); }

  std::int64_t batch_total() const {
    return std::accumulate(int_batches.begin(), int_batches.end(), std::int64_t{0});
  }

  std::int64_t dataset_size() const { return sample_spans.empty() ? 0 : sample_spans.back().end; }

  /// Dataset share owned by each worker, as doubles.
  std::vector<double> shares() const {
    std::vector<double> out;
    out.reserve(ranges.size());
    for (const auto& r : ranges) out.push_back(r.width().value());
    return out;
  }
};

namespace detail {

// Decimal fractions are compared on a 1e-9 grid. Values within half a grid
// step of an integer are treated as that integer, and equal grid keys count as
// ties, so representation noise from b_i * B never reorders workers.
inline constexpr std::int64_t kDecimalScale = 1'000'000'000;
inline constexpr std::int64_t kHalfKey = kDecimalScale / 2;

struct SplitValue {
  std::int64_t whole;
  std::int64_t decimal_key;
};

inline SplitValue split_decimal(double x) {
  const double f = std::floor(x);
  auto key = static_cast<std::int64_t>(std::llround((x - f) * static_cast<double>(kDecimalScale)));
  auto whole = static_cast<std::int64_t>(f);
  if (key >= kDecimalScale) {
    whole += 1;
    key = 0;
  }
  return {whole, key};
}

inline std::int64_t floor_mul_div(std::int64_t num, std::int64_t factor, std::int64_t den) {
  return static_cast<std::int64_t>(static_cast<__int128>(num) * factor / den);
}

}  // namespace detail

/// p = d / t: dataset share processed per second during the previous epoch.
inline double evaluate_performance(double share, double epoch_time) {
  if (!std::isfinite(share) || share <= 0.0 || share > 1.0) {
    throw Error(Errc::invalid_measurement, "dataset share must lie in (0, 1], got " + std::to_string(share));
  }
  if (!std::isfinite(epoch_time) || epoch_time <= 0.0) {
    throw Error(Errc::invalid_measurement, "epoch time must be positive, got " + std::to_string(epoch_time));
  }
  return share / epoch_time;
}

inline std::vector<PerfEstimate> evaluate_performance(std::span<const double> shares,
                                                      std::span<const double> epoch_times) {
  if (shares.size() != epoch_times.size()) {
    throw Error(Errc::configuration, "shares and epoch times differ in length");
  }
  std::vector<PerfEstimate> out;
  out.reserve(shares.size());
  for (std::size_t i = 0; i < shares.size(); ++i) {
    out.push_back({i, evaluate_performance(shares[i], epoch_times[i])});
  }
  return out;
}

/// b_i = p_i / sum(p), in worker order.
inline std::vector<double> compute_batch_fractions(std::span<const double> perfs) {
  if (perfs.empty()) throw Error(Errc::invalid_performance, "no performance estimates");
  double total = 0.0;
  for (double p : perfs) {
    if (!std::isfinite(p) || p <= 0.0) {
      throw Error(Errc::invalid_performance, "estimates must be positive and finite, got " + std::to_string(p));
    }
    total += p;
  }
  std::vector<double> out;
  out.reserve(perfs.size());
  for (double p : perfs) out.push_back(p / total);
  return out;
}

inline std::vector<double> compute_batch_fractions(std::span<const PerfEstimate> perfs) {
  std::vector<PerfEstimate> sorted(perfs.begin(), perfs.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const PerfEstimate& a, const PerfEstimate& b) { return a.worker_id < b.worker_id; });
  std::vector<double> values;
  values.reserve(sorted.size());
  for (const auto& p : sorted) values.push_back(p.value);
  return compute_batch_fractions(values);
}

inline std::vector<double> scale_to_real_batches(std::span<const double> fractions, std::int64_t total_budget) {
  if (fractions.empty()) throw Error(Errc::invalid_performance, "no batch fractions");
  if (total_budget < static_cast<std::int64_t>(fractions.size())) {
    throw Error(Errc::budget_too_small, "total batch " + std::to_string(total_budget) + " is below worker count " +
                                            std::to_string(fractions.size()));
  }
  double sum = 0.0;
  for (double b : fractions) {
    if (!std::isfinite(b) || b < 0.0) throw Error(Errc::invalid_performance, "fractions must be non-negative");
    sum += b;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(Errc::invalid_performance, "fractions sum to " + std::to_string(sum) + ", expected 1");
  }
  std::vector<double> out;
  out.reserve(fractions.size());
  const auto budget = static_cast<double>(total_budget);
  for (double b : fractions) out.push_back(b * budget);
  return out;
}

/// Integerizes real batch sizes: floor every value, then give +1 to at most
/// k = B - sum(floor) workers, taken in descending order of decimal fraction
/// (ties by ascending worker index), and only those whose decimal fraction is
/// at least 0.5. The result may sum to less than B.
inline std::vector<std::int64_t> round_twice(std::span<const double> real_batches, std::int64_t total_budget) {
  if (real_batches.empty()) throw Error(Errc::invalid_batch, "no batch sizes to round");
  double sum = 0.0;
  for (double x : real_batches) {
    if (!std::isfinite(x) || x < 0.0) {
      throw Error(Errc::invalid_batch, "batch sizes must be non-negative, got " + std::to_string(x));
    }
    sum += x;
  }
  if (std::abs(sum - static_cast<double>(total_budget)) > 1e-6) {
    throw Error(Errc::invalid_batch,
                "batch sizes sum to " + std::to_string(sum) + " but the budget is " + std::to_string(total_budget));
  }

  const std::size_t n = real_batches.size();
  std::vector<std::int64_t> out(n);
  std::vector<std::int64_t> keys(n);
  std::int64_t floor_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto parts = detail::split_decimal(real_batches[i]);
    out[i] = parts.whole;
    keys[i] = parts.decimal_key;
    floor_sum += parts.whole;
  }

  const std::int64_t k = std::max<std::int64_t>(0, total_budget - floor_sum);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });

  for (std::size_t r = 0; r < order.size() && static_cast<std::int64_t>(r) < k; ++r) {
    const std::size_t i = order[r];
    if (keys[i] < detail::kHalfKey) break;
    ++out[i];
  }
  return out;
}

/// Raises every zero batch to 1, taking the sample from the currently largest
/// batch (lowest index on ties). The sum is unchanged.
inline void enforce_min_batch(std::vector<std::int64_t>& batches) {
  for (std::size_t i = 0; i < batches.size(); ++i) {
    if (batches[i] != 0) continue;
    const auto largest = std::max_element(batches.begin(), batches.end());
    if (*largest <= 1) {
      throw Error(Errc::budget_too_small, "cannot give every worker a non-empty batch");
    }
    --*largest;
    batches[i] = 1;
  }
}

inline BatchAllocation allocate_batches(std::span<const double> perfs, std::int64_t total_budget) {
  BatchAllocation a;
  a.total_budget = total_budget;
  a.fractions = compute_batch_fractions(perfs);
  a.real_batches = scale_to_real_batches(a.fractions, total_budget);
  a.int_batches = round_twice(a.real_batches, total_budget);
  return a;
}

/// L1-normalized cumulative ranges: worker i owns
/// [sum(b[<i]) / S, sum(b[<=i]) / S) with S = sum(b).
inline std::vector<FractionRange> partition_ranges(std::span<const std::int64_t> int_batches) {
  if (int_batches.empty()) throw Error(Errc::empty_partition, "no workers to partition across");
  std::int64_t total = 0;
  for (auto b : int_batches) {
    if (b < 0) throw Error(Errc::invalid_batch, "batch sizes must be non-negative");
    total += b;
  }
  if (total == 0) throw Error(Errc::empty_partition, "all batch sizes are zero");

  std::vector<FractionRange> out;
  out.reserve(int_batches.size());
  std::int64_t acc = 0;
  for (auto b : int_batches) {
    out.push_back({{acc, total}, {acc + b, total}});
    acc += b;
  }
  return out;
}

/// Maps fractional ranges onto sample indices. Boundaries are floored, then
/// nudged so every non-empty range keeps at least one sample.
inline std::vector<SampleSpan> spans_from_ranges(std::span<const FractionRange> ranges, std::int64_t dataset_size) {
  if (ranges.empty()) throw Error(Errc::empty_partition, "no ranges");
  const auto n = static_cast<std::int64_t>(ranges.size());
  if (dataset_size < n) {
    throw Error(Errc::dataset_too_small,
                "dataset of " + std::to_string(dataset_size) + " samples cannot cover " + std::to_string(n) + " workers");
  }
  if (!(ranges.front().lower == Fraction{0, 1}) || !(ranges.back().upper == Fraction{1, 1})) {
    throw Error(Errc::configuration, "ranges must cover [0, 1]");
  }
  for (std::size_t i = 0; i + 1 < ranges.size(); ++i) {
    if (!(ranges[i].upper == ranges[i + 1].lower)) throw Error(Errc::configuration, "ranges are not contiguous");
  }

  const std::size_t count = ranges.size();
  std::vector<std::int64_t> positive(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (ranges[i].upper < ranges[i].lower) throw Error(Errc::configuration, "range upper bound below lower bound");
    positive[i] = ranges[i].lower < ranges[i].upper ? 1 : 0;
  }

  std::vector<std::int64_t> starts(count + 1);
  starts[0] = 0;
  starts[count] = dataset_size;
  for (std::size_t i = 1; i < count; ++i) {
    const auto& lo = ranges[i].lower;
    starts[i] = std::max(detail::floor_mul_div(lo.num, dataset_size, lo.den), starts[i - 1] + positive[i - 1]);
  }
  for (std::size_t i = count - 1; i >= 1; --i) {
    starts[i] = std::min(starts[i], starts[i + 1] - positive[i]);
  }

  std::vector<SampleSpan> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back({starts[i], starts[i + 1]});
  return out;
}

inline PartitionPlan make_plan(std::vector<std::int64_t> int_batches, std::int64_t dataset_size, int epoch) {
  PartitionPlan plan;
  plan.epoch = epoch;
  plan.int_batches = std::move(int_batches);
  plan.ranges = partition_ranges(plan.int_batches);
  plan.sample_spans = spans_from_ranges(plan.ranges, dataset_size);
  return plan;
}

/// Fixed S-SGD layout: B/n per worker, twice-rounded, even ranges.
inline PartitionPlan even_plan(std::size_t n_workers, std::int64_t total_budget, std::int64_t dataset_size,
                               int epoch = 0) {
  if (n_workers == 0) throw Error(Errc::empty_partition, "no workers");
  if (total_budget < static_cast<std::int64_t>(n_workers)) {
    throw Error(Errc::budget_too_small, "total batch " + std::to_string(total_budget) + " is below worker count " +
                                            std::to_string(n_workers));
  }
  const std::vector<double> reals(n_workers, static_cast<double>(total_budget) / static_cast<double>(n_workers));
  auto batches = round_twice(reals, total_budget);
  enforce_min_batch(batches);
  return make_plan(std::move(batches), dataset_size, epoch);
}

inline PartitionPlan plan_from_perfs(std::span<const double> perfs, std::int64_t total_budget,
                                     std::int64_t dataset_size, int epoch) {
  auto allocation = allocate_batches(perfs, total_budget);
  enforce_min_batch(allocation.int_batches);
  return make_plan(std::move(allocation.int_batches), dataset_size, epoch);
}

/// One scheduling step. Epoch 0 always gets the even plan; later epochs are
/// planned from the previous epoch's shares and measured compute times.
inline PartitionPlan plan_next_epoch(std::span<const double> prev_shares, std::span<const double> prev_times,
                                     std::int64_t total_budget, std::int64_t dataset_size, int epoch) {
  if (prev_shares.size() != prev_times.size()) {
    throw Error(Errc::configuration, "shares and epoch times differ in length");
  }
  if (prev_shares.empty()) throw Error(Errc::empty_partition, "no workers");
  if (epoch < 0) throw Error(Errc::configuration, "epoch must be non-negative");
  if (epoch == 0) return even_plan(prev_shares.size(), total_budget, dataset_size, 0);

  std::vector<double> perfs;
  perfs.reserve(prev_shares.size());
  for (std::size_t i = 0; i < prev_shares.size(); ++i) {
    perfs.push_back(evaluate_performance(prev_shares[i], prev_times[i]));
  }
  return plan_from_perfs(perfs, total_budget, dataset_size, epoch);
}

/// Stateful wrapper around plan_next_epoch with optional exponential
/// smoothing of the performance estimates. smoothing = 0 uses the previous
/// epoch only.
class DynamicBatchPlanner {
 public:
  DynamicBatchPlanner(std::size_t n_workers, std::int64_t total_budget, std::int64_t dataset_size,
                      double smoothing = 0.0)
      : n_workers_(n_workers), total_budget_(total_budget), dataset_size_(dataset_size), smoothing_(smoothing) {
    if (!(smoothing >= 0.0 && smoothing < 1.0)) {
      throw Error(Errc::configuration, "smoothing factor must lie in [0, 1)");
    }
  }

  PartitionPlan initial_plan() const { return even_plan(n_workers_, total_budget_, dataset_size_, 0); }

  PartitionPlan next(const PartitionPlan& previous, std::span<const double> measured_times) {
    if (measured_times.size() != n_workers_ || previous.worker_count() != n_workers_) {
      throw Error(Errc::configuration, "worker count changed between epochs");
    }
    const auto shares = previous.shares();
    std::vector<double> perfs;
    perfs.reserve(n_workers_);
    for (std::size_t i = 0; i < n_workers_; ++i) perfs.push_back(evaluate_performance(shares[i], measured_times[i]));
    if (smoothing_ > 0.0 && !smoothed_.empty()) {
      for (std::size_t i = 0; i < n_workers_; ++i) perfs[i] = smoothing_ * smoothed_[i] + (1.0 - smoothing_) * perfs[i];
    }
    smoothed_ = perfs;
    return plan_from_perfs(perfs, total_budget_, dataset_size_, previous.epoch + 1);
  }

 private:
  std::size_t n_workers_;
  std::int64_t total_budget_;
  std::int64_t dataset_size_;
  double smoothing_;
  std::vector<double> smoothed_;
};

}  // namespace dbs
