#pragma once

// Run reports: savings arithmetic, long-format per-epoch CSV, and the
// combined JSON document (schema version 1).

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dbs/cluster_sim.hpp"
#include "dbs/core.hpp"
#include "dbs/error.hpp"

namespace dbs::report {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kCsvHeader = "epoch,worker_id,t_gpu,t_w,t_s,T_a,batch";

struct EpochRow {
  int epoch = 0;
  std::vector<double> per_worker_gpu;
  std::vector<double> per_worker_wait;
  double t_s = 0.0;
  double T_a = 0.0;
  std::vector<std::int64_t> int_batches;
  std::vector<FractionRange> ranges;      // JSON only; the CSV carries batches
  std::vector<SampleSpan> sample_spans;  // JSON only

  friend bool operator==(const EpochRow&, const EpochRow&) = default;
};

struct RunTotals {
  double total_Ta = 0.0;
  double total_wait = 0.0;
  std::optional<double> savings_vs_baseline_percent;

  friend bool operator==(const RunTotals&, const RunTotals&) = default;
};

struct RunReport {
  std::string scenario_name;
  std::string strategy;
  std::uint64_t seed = 0;
  std::vector<EpochRow> epoch_rows;
  RunTotals totals;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Pass/fail record for one statistical check of the SGD lab.
struct SgdCheckSummary {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double limit = 0.0;
  double margin = 0.0;  // positive = inside the limit
  std::map<std::string, double> metrics;
  std::string detail;

  friend bool operator==(const SgdCheckSummary&, const SgdCheckSummary&) = default;
};

inline double savings_percent(double candidate_total_Ta, double baseline_total_Ta) {
  if (!(baseline_total_Ta > 0.0)) {
    throw Error(Errc::invalid_baseline, "baseline total must be positive, got " + std::to_string(baseline_total_Ta));
  }
  return 100.0 * (baseline_total_Ta - candidate_total_Ta) / baseline_total_Ta;
}

inline RunTotals compute_totals(std::span<const EpochRow> rows) {
  RunTotals t;
  for (const auto& r : rows) {
    t.total_Ta += r.T_a;
    for (double w : r.per_worker_wait) t.total_wait += w;
  }
  return t;
}

inline RunReport make_run_report(std::string scenario_name, std::string strategy, std::uint64_t seed,
                                 std::span<const sim::EpochStats> stats) {
  RunReport r;
  r.scenario_name = std::move(scenario_name);
  r.strategy = std::move(strategy);
  r.seed = seed;
  r.epoch_rows.reserve(stats.size());
  for (const auto& s : stats) {
    r.epoch_rows.push_back({s.epoch, s.per_worker_gpu, s.per_worker_wait, s.sync_time, s.epoch_wall_time,
                            s.plan.int_batches, s.plan.ranges, s.plan.sample_spans});
  }
  r.totals = compute_totals(r.epoch_rows);
  return r;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// One row per worker per epoch; t_s and T_a repeat across an epoch's rows.
inline void write_epoch_csv(const RunReport& report, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& row : report.epoch_rows) {
    for (std::size_t w = 0; w < row.per_worker_gpu.size(); ++w) {
      out << row.epoch << ',' << w << ',' << detail::fixed6(row.per_worker_gpu[w]) << ','
          << detail::fixed6(row.per_worker_wait[w]) << ',' << detail::fixed6(row.t_s) << ','
          << detail::fixed6(row.T_a) << ',' << row.int_batches[w] << '\n';
    }
  }
}

inline void write_epoch_csv(const RunReport& report, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open " + destination.string() + " for writing");
  write_epoch_csv(report, out);
  out.flush();
  if (!out) throw Error(Errc::io, "failed writing " + destination.string());
}

/// Parses the long-format CSV back into epoch rows.
inline std::vector<EpochRow> read_epoch_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(Errc::parse, "missing or unexpected CSV header");
  }
  std::vector<EpochRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 7) throw Error(Errc::parse, "line " + std::to_string(line_no) + ": expected 7 fields");
    try {
      const int epoch = std::stoi(f[0]);
      const auto worker = static_cast<std::size_t>(std::stoull(f[1]));
      if (rows.empty() || rows.back().epoch != epoch) {
        rows.push_back({});
        rows.back().epoch = epoch;
        rows.back().t_s = std::stod(f[4]);
        rows.back().T_a = std::stod(f[5]);
      }
      auto& row = rows.back();
      if (worker != row.per_worker_gpu.size()) {
        throw Error(Errc::parse, "line " + std::to_string(line_no) + ": worker ids out of order");
      }
      row.per_worker_gpu.push_back(std::stod(f[2]));
      row.per_worker_wait.push_back(std::stod(f[3]));
      row.int_batches.push_back(std::stoll(f[6]));
    } catch (const std::logic_error&) {
      throw Error(Errc::parse, "line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const RunReport& r) {
  json rows = json::array();
  for (const auto& row : r.epoch_rows) {
    json ranges = json::array();
    for (const auto& q : row.ranges) ranges.push_back({{q.lower.num, q.lower.den}, {q.upper.num, q.upper.den}});
    json spans = json::array();
    for (const auto& sp : row.sample_spans) spans.push_back({sp.start, sp.end});
    rows.push_back({{"epoch", row.epoch},
                    {"ranges", std::move(ranges)},
                    {"sample_spans", std::move(spans)},
                    {"per_worker_gpu", row.per_worker_gpu},
                    {"per_worker_wait", row.per_worker_wait},
                    {"t_s", row.t_s},
                    {"T_a", row.T_a},
                    {"int_batches", row.int_batches}});
  }
  return {{"scenario_name", r.scenario_name},
          {"strategy", r.strategy},
          {"seed", r.seed},
          {"epoch_rows", std::move(rows)},
          {"totals",
           {{"total_Ta", r.totals.total_Ta},
            {"total_wait", r.totals.total_wait},
            {"savings_vs_baseline_percent", optional_number(r.totals.savings_vs_baseline_percent)}}}};
}

inline json to_json(const SgdCheckSummary& s) {
  json metrics = json::object();
  for (const auto& [k, v] : s.metrics) metrics[k] = v;
  return {{"name", s.name},     {"passed", s.passed},         {"measured", s.measured}, {"limit", s.limit},
          {"margin", s.margin}, {"metrics", std::move(metrics)}, {"detail", s.detail}};
}

namespace detail {

// Non-finite doubles serialize as null; read them back as NaN.
inline double number_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline RunReport run_report_from_json(const json& j) {
  RunReport r;
  r.scenario_name = j.at("scenario_name").get<std::string>();
  r.strategy = j.at("strategy").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& row : j.at("epoch_rows")) {
    EpochRow e;
    e.epoch = row.at("epoch").get<int>();
    e.per_worker_gpu = row.at("per_worker_gpu").get<std::vector<double>>();
    e.per_worker_wait = row.at("per_worker_wait").get<std::vector<double>>();
    e.t_s = row.at("t_s").get<double>();
    e.T_a = row.at("T_a").get<double>();
    e.int_batches = row.at("int_batches").get<std::vector<std::int64_t>>();
    for (const auto& q : row.at("ranges")) {
      e.ranges.push_back({{q.at(0).at(0).get<std::int64_t>(), q.at(0).at(1).get<std::int64_t>()},
                          {q.at(1).at(0).get<std::int64_t>(), q.at(1).at(1).get<std::int64_t>()}});
    }
    for (const auto& sp : row.at("sample_spans")) {
      e.sample_spans.push_back({sp.at(0).get<std::int64_t>(), sp.at(1).get<std::int64_t>()});
    }
    r.epoch_rows.push_back(std::move(e));
  }
  const auto& t = j.at("totals");
  r.totals.total_Ta = t.at("total_Ta").get<double>();
  r.totals.total_wait = t.at("total_wait").get<double>();
  if (!t.at("savings_vs_baseline_percent").is_null()) {
    r.totals.savings_vs_baseline_percent = t.at("savings_vs_baseline_percent").get<double>();
  }
  return r;
}

inline SgdCheckSummary sgd_check_from_json(const json& j) {
  SgdCheckSummary s;
  s.name = j.at("name").get<std::string>();
  s.passed = j.at("passed").get<bool>();
  s.measured = detail::number_or_nan(j.at("measured"));
  s.limit = detail::number_or_nan(j.at("limit"));
  s.margin = detail::number_or_nan(j.at("margin"));
  for (const auto& [k, v] : j.at("metrics").items()) s.metrics[k] = detail::number_or_nan(v);
  s.detail = j.at("detail").get<std::string>();
  return s;
}

/// Serialized document. Top-level keys are emitted in the fixed order
/// schema_version, scenarios, sgd_checks; nested keys are sorted.
inline std::string run_json(std::span<const RunReport> reports, std::span<const SgdCheckSummary> checks) {
  std::string out = "{\"schema_version\":" + std::to_string(kSchemaVersion) + ",\"scenarios\":[";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (i) out += ',';
    out += to_json(reports[i]).dump();
  }
  out += "],\"sgd_checks\":[";
  for (std::size_t i = 0; i < checks.size(); ++i) {
    if (i) out += ',';
    out += to_json(checks[i]).dump();
  }
  out += "]}";
  return out;
}

inline void write_run_json(std::span<const RunReport> reports, std::span<const SgdCheckSummary> checks,
                           const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open " + destination.string() + " for writing");
  out << run_json(reports, checks) << '\n';
  out.flush();
  if (!out) throw Error(Errc::io, "failed writing " + destination.string());
}

struct RunDocument {
  int schema_version = 0;
  std::vector<RunReport> scenarios;
  std::vector<SgdCheckSummary> sgd_checks;
};

inline RunDocument parse_run_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse, e.what());
  }
  RunDocument doc;
  try {
    doc.schema_version = j.at("schema_version").get<int>();
    for (const auto& s : j.at("scenarios")) doc.scenarios.push_back(run_report_from_json(s));
    for (const auto& c : j.at("sgd_checks")) doc.sgd_checks.push_back(sgd_check_from_json(c));
  } catch (const json::exception& e) {
    throw Error(Errc::parse, e.what());
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Strategy comparison

struct ComparisonRow {
  std::string strategy;
  double total_Ta = 0.0;
  double savings_percent = 0.0;
};

inline std::vector<ComparisonRow> compare_strategies(std::span<const RunReport> reports,
                                                     const std::string& baseline_strategy) {
  const RunReport* baseline = nullptr;
  for (const auto& r : reports) {
    if (r.strategy == baseline_strategy) {
      baseline = &r;
      break;
    }
  }
  if (!baseline) throw Error(Errc::baseline_not_found, "no run for baseline strategy '" + baseline_strategy + "'");
  std::vector<ComparisonRow> rows;
  rows.reserve(reports.size());
  for (const auto& r : reports) {
    rows.push_back({r.strategy, r.totals.total_Ta, savings_percent(r.totals.total_Ta, baseline->totals.total_Ta)});
  }
  return rows;
}

inline void print_comparison(std::span<const ComparisonRow> rows, const std::string& baseline, std::ostream& out) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.strategy.size());
  out << std::left << std::setw(static_cast<int>(width)) << "strategy" << "  " << std::right << std::setw(14)
      << "total_Ta[s]" << "  " << std::setw(12) << "savings[%]" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.strategy << "  " << std::right << std::fixed
        << std::setprecision(3) << std::setw(14) << r.total_Ta << "  " << std::setprecision(2) << std::setw(12)
        << r.savings_percent << (r.strategy == baseline ? "  (baseline)" : "") << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace dbs::report
