#pragma once

// Scenario configuration: the JSON config grammar, validation with field
// paths, the builtin catalog, and the runners behind the command line tool.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dbs/cluster_sim.hpp"
#include "dbs/core.hpp"
#include "dbs/error.hpp"
#include "dbs/report.hpp"
#include "dbs/sgd_checks.hpp"
#include "dbs/sgd_lab.hpp"

namespace dbs::scenario {

using nlohmann::json;

enum ExitCode : int { kSuccess = 0, kValidationFailure = 1, kRuntimeFailure = 2, kCheckFailure = 3 };

struct DisturbanceSpec {
  std::size_t worker = 0;
  sim::DisturbanceEvent event;

  friend bool operator==(const DisturbanceSpec&, const DisturbanceSpec&) = default;
};

struct SgdCheckConfig {
  std::string problem = "quadratic";  // or "logistic"
  std::int64_t dimension = 10;
  double mu = 1.0;  // l2 weight for the logistic problem
  double noise_scale = 1.0;
  std::int64_t sample_count = 1024;
  double initial_distance = 4.0;  // ||x0 - x*||
  double separation = 1.0;        // logistic class separation
  std::uint64_t seed = 7;

  struct Bound {
    std::vector<double> gamma_mu{0.1, 0.5, 0.9};
    std::int64_t seeds = 1000;
    std::int64_t iterations = 200;
    std::int64_t total_budget = 32;
    std::int64_t noise_draws = 1000;
    friend bool operator==(const Bound&, const Bound&) = default;
  } bound;

  struct Variance {
    std::vector<std::int64_t> m_values{1, 4, 16, 64};
    std::int64_t draws = 100000;
    double ratio_tolerance = 0.10;
    friend bool operator==(const Variance&, const Variance&) = default;
  } variance;

  struct Equivalence {
    std::int64_t dimension = 1024;
    std::int64_t sample_count = 2048;
    std::int64_t total_budget = 128;
    std::int64_t seeds = 100;
    std::int64_t iterations = 60;
    double gamma_mu = 0.5;
    double momentum = 0.5;
    double relative_tolerance = 0.02;
    friend bool operator==(const Equivalence&, const Equivalence&) = default;
  } equivalence;

  friend bool operator==(const SgdCheckConfig&, const SgdCheckConfig&) = default;
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  std::size_t n_workers = 0;
  std::vector<double> worker_costs;
  double per_iteration_overhead = 0.0;
  std::vector<DisturbanceSpec> disturbances;
  std::int64_t dataset_size = 0;
  std::int64_t total_budget = 0;
  int n_epochs = 1;
  std::vector<sim::StrategyConfig> strategies;
  std::uint64_t seed = 0;
  double timing_jitter = 0.0;
  double sync_cost_per_round = sim::kDefaultSyncCostPerRound;
  double sync_cost_per_worker = sim::kDefaultSyncCostPerWorker;
  std::optional<SgdCheckConfig> sgd_check;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

inline const char* type_name(const json& j) { return j.type_name(); }

/// Reads one JSON object, tracking the field path for error messages and
/// rejecting keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) {
      throw ValidationError(path_.empty() ? "<root>" : path_, std::string("expected an object, got ") + type_name(object_));
    }
  }

  bool has(const std::string& key) const { return object_.contains(key) && !object_.at(key).is_null(); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!object_.contains(key)) throw ValidationError(join_path(path_, key), "missing required field");
    return object_.at(key);
  }

  std::string path(const std::string& key) const { return join_path(path_, key); }

  template <class T>
  T get(const std::string& key) {
    return convert<T>(raw(key), path(key));
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(object_.at(key), path(key));
  }

  void mark(const std::string& key) { seen_.insert(key); }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) throw ValidationError(join_path(path_, key), "unknown field");
    }
  }

  template <class T>
  static T convert(const json& j, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ValidationError(where, std::string("expected a boolean, got ") + type_name(j));
      return j.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw ValidationError(where, std::string("expected a string, got ") + type_name(j));
      return j.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw ValidationError(where, std::string("expected a number, got ") + type_name(j));
      return j.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) {
        throw ValidationError(where, std::string("expected an integer, got ") + type_name(j));
      }
      if constexpr (std::is_unsigned_v<T>) {
        if (j.is_number_unsigned()) return j.get<T>();
        if (j.get<std::int64_t>() < 0) throw ValidationError(where, "must be non-negative");
      }
      return j.get<T>();
    } else {
      if (!j.is_array()) throw ValidationError(where, std::string("expected an array, got ") + type_name(j));
      T out;
      for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(convert<typename T::value_type>(j[i], index_path(where, i)));
      }
      return out;
    }
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

inline sim::StrategyConfig parse_strategy(const json& j, const std::string& path, const ScenarioConfig& scenario) {
  ObjectReader r(j, path);
  sim::StrategyConfig s;
  const auto kind_text = r.get<std::string>("kind");
  const auto kind = sim::strategy_kind_from_string(kind_text);
  if (!kind) {
    throw ValidationError(r.path("kind"), "unknown strategy '" + kind_text +
                                              "' (expected fixed_ssgd, model_averaging, one_shot or dbs)");
  }
  s.kind = *kind;
  s.sync_interval = r.get_or<int>("sync_interval", 1);
  s.sync_at_epoch_end = r.get_or<bool>("sync_at_epoch_end", false);
  s.perf_smoothing = r.get_or<double>("perf_smoothing", 0.0);
  s.label = r.get_or<std::string>("label", "");
  s.total_budget = scenario.total_budget;
  s.sync_cost_per_round = scenario.sync_cost_per_round;
  s.sync_cost_per_worker = scenario.sync_cost_per_worker;
  if (r.has("sync_cost")) {
    ObjectReader c(r.raw("sync_cost"), r.path("sync_cost"));
    s.sync_cost_per_round = c.get_or<double>("per_round", s.sync_cost_per_round);
    s.sync_cost_per_worker = c.get_or<double>("per_worker", s.sync_cost_per_worker);
    c.finish();
  } else {
    r.mark("sync_cost");
  }
  r.finish();
  return s;
}

inline DisturbanceSpec parse_disturbance(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  DisturbanceSpec d;
  d.worker = r.get<std::size_t>("worker");
  d.event.start_epoch = r.get<int>("start_epoch");
  if (r.has("end_epoch")) {
    d.event.end_epoch = r.get<int>("end_epoch");
  } else {
    r.mark("end_epoch");
  }
  const bool additive = r.has("extra_epoch_seconds");
  const bool multiplicative = r.has("cost_multiplier");
  if (additive == multiplicative) {
    throw ValidationError(path, "exactly one of extra_epoch_seconds or cost_multiplier is required");
  }
  if (additive) {
    d.event.kind = sim::DisturbanceEvent::Kind::additive;
    d.event.value = r.get<double>("extra_epoch_seconds");
    r.mark("cost_multiplier");
  } else {
    d.event.kind = sim::DisturbanceEvent::Kind::multiplicative;
    d.event.value = r.get<double>("cost_multiplier");
    r.mark("extra_epoch_seconds");
  }
  r.finish();
  return d;
}

inline SgdCheckConfig parse_sgd_check(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  SgdCheckConfig c;
  c.problem = r.get_or<std::string>("problem", c.problem);
  c.dimension = r.get_or<std::int64_t>("dimension", c.dimension);
  c.mu = r.get_or<double>("mu", c.mu);
  c.noise_scale = r.get_or<double>("noise_scale", c.noise_scale);
  c.sample_count = r.get_or<std::int64_t>("sample_count", c.sample_count);
  c.initial_distance = r.get_or<double>("initial_distance", c.initial_distance);
  c.separation = r.get_or<double>("separation", c.separation);
  c.seed = r.get_or<std::uint64_t>("seed", c.seed);
  if (r.has("bound")) {
    ObjectReader b(r.raw("bound"), r.path("bound"));
    c.bound.gamma_mu = b.get_or<std::vector<double>>("gamma_mu", c.bound.gamma_mu);
    c.bound.seeds = b.get_or<std::int64_t>("seeds", c.bound.seeds);
    c.bound.iterations = b.get_or<std::int64_t>("iterations", c.bound.iterations);
    c.bound.total_budget = b.get_or<std::int64_t>("total_budget", c.bound.total_budget);
    c.bound.noise_draws = b.get_or<std::int64_t>("noise_draws", c.bound.noise_draws);
    b.finish();
  } else {
    r.mark("bound");
  }
  if (r.has("variance")) {
    ObjectReader l(r.raw("variance"), r.path("variance"));
    c.variance.m_values = l.get_or<std::vector<std::int64_t>>("m_values", c.variance.m_values);
    c.variance.draws = l.get_or<std::int64_t>("draws", c.variance.draws);
    c.variance.ratio_tolerance = l.get_or<double>("ratio_tolerance", c.variance.ratio_tolerance);
    l.finish();
  } else {
    r.mark("variance");
  }
  if (r.has("equivalence")) {
    ObjectReader e(r.raw("equivalence"), r.path("equivalence"));
    auto& q = c.equivalence;
    q.dimension = e.get_or<std::int64_t>("dimension", q.dimension);
    q.sample_count = e.get_or<std::int64_t>("sample_count", q.sample_count);
    q.total_budget = e.get_or<std::int64_t>("total_budget", q.total_budget);
    q.seeds = e.get_or<std::int64_t>("seeds", q.seeds);
    q.iterations = e.get_or<std::int64_t>("iterations", q.iterations);
    q.gamma_mu = e.get_or<double>("gamma_mu", q.gamma_mu);
    q.momentum = e.get_or<double>("momentum", q.momentum);
    q.relative_tolerance = e.get_or<double>("relative_tolerance", q.relative_tolerance);
    e.finish();
  } else {
    r.mark("equivalence");
  }
  r.finish();
  return c;
}

}  // namespace detail

/// Checks every invariant reachable from the config. Throws ValidationError
/// naming the offending field.
inline void validate(const ScenarioConfig& c) {
  if (c.name.empty()) throw ValidationError("name", "must not be empty");
  for (char ch : c.name) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-')) {
      throw ValidationError("name", "may only contain letters, digits, '_' and '-'");
    }
  }
  if (c.n_workers < 1) throw ValidationError("n_workers", "must be at least 1");
  if (c.worker_costs.size() != c.n_workers) {
    throw ValidationError("worker_costs", "expected " + std::to_string(c.n_workers) + " entries, got " +
                                              std::to_string(c.worker_costs.size()));
  }
  for (std::size_t i = 0; i < c.worker_costs.size(); ++i) {
    if (!(c.worker_costs[i] > 0.0) || !std::isfinite(c.worker_costs[i])) {
      throw ValidationError(detail::index_path("worker_costs", i), "seconds per sample must be positive");
    }
  }
  if (!(c.per_iteration_overhead >= 0.0)) throw ValidationError("per_iteration_overhead", "must be non-negative");
  if (c.total_budget < static_cast<std::int64_t>(c.n_workers)) {
    throw ValidationError("total_budget", "must be at least n_workers (" + std::to_string(c.n_workers) + ")");
  }
  if (c.dataset_size < c.total_budget) {
    throw ValidationError("dataset_size", "must be at least total_budget (" + std::to_string(c.total_budget) + ")");
  }
  if (c.n_epochs < 1) throw ValidationError("n_epochs", "must be at least 1");
  if (!(c.timing_jitter >= 0.0)) throw ValidationError("timing_jitter", "must be non-negative");
  if (!(c.sync_cost_per_round >= 0.0)) throw ValidationError("sync_cost.per_round", "must be non-negative");
  if (!(c.sync_cost_per_worker >= 0.0)) throw ValidationError("sync_cost.per_worker", "must be non-negative");

  std::map<std::size_t, const sim::DisturbanceEvent*> last_by_worker;
  for (std::size_t i = 0; i < c.disturbances.size(); ++i) {
    const auto path = detail::index_path("disturbances", i);
    const auto& d = c.disturbances[i];
    if (d.worker >= c.n_workers) {
      throw ValidationError(path + ".worker", "worker id must be below n_workers (" + std::to_string(c.n_workers) + ")");
    }
    if (d.event.start_epoch < 0) throw ValidationError(path + ".start_epoch", "must be non-negative");
    if (d.event.end_epoch && *d.event.end_epoch <= d.event.start_epoch) {
      throw ValidationError(path + ".end_epoch", "must be greater than start_epoch");
    }
    if (d.event.kind == sim::DisturbanceEvent::Kind::additive && !(d.event.value >= 0.0)) {
      throw ValidationError(path + ".extra_epoch_seconds", "must be non-negative");
    }
    if (d.event.kind == sim::DisturbanceEvent::Kind::multiplicative && !(d.event.value >= 1.0)) {
      throw ValidationError(path + ".cost_multiplier", "must be at least 1");
    }
    auto it = last_by_worker.find(d.worker);
    if (it != last_by_worker.end()) {
      const auto& prev = *it->second;
      if (d.event.start_epoch < prev.start_epoch) {
        throw ValidationError(path + ".start_epoch", "disturbances of one worker must be sorted by start_epoch");
      }
      if (!prev.end_epoch || *prev.end_epoch > d.event.start_epoch) {
        throw ValidationError(path, "overlaps an earlier disturbance on worker " + std::to_string(d.worker));
      }
    }
    last_by_worker[d.worker] = &d.event;
  }

  if (c.strategies.empty()) throw ValidationError("strategies", "at least one strategy is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < c.strategies.size(); ++i) {
    const auto path = detail::index_path("strategies", i);
    const auto& s = c.strategies[i];
    if (s.sync_interval < 1) throw ValidationError(path + ".sync_interval", "must be at least 1");
    if ((s.kind == sim::StrategyKind::fixed_ssgd || s.kind == sim::StrategyKind::dbs) && s.sync_interval != 1) {
      throw ValidationError(path + ".sync_interval", "must be 1 for " + sim::to_string(s.kind));
    }
    if (!(s.perf_smoothing >= 0.0 && s.perf_smoothing < 1.0)) {
      throw ValidationError(path + ".perf_smoothing", "must lie in [0, 1)");
    }
    if (!(s.sync_cost_per_round >= 0.0)) throw ValidationError(path + ".sync_cost.per_round", "must be non-negative");
    if (!(s.sync_cost_per_worker >= 0.0)) {
      throw ValidationError(path + ".sync_cost.per_worker", "must be non-negative");
    }
    if (s.total_budget != c.total_budget) throw ValidationError(path, "total_budget differs from the scenario's");
    for (char ch : s.name()) {
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-')) {
        throw ValidationError(path + ".label", "may only contain letters, digits, '_' and '-'");
      }
    }
    if (!names.insert(s.name()).second) throw ValidationError(path, "duplicate strategy name '" + s.name() + "'");
  }

  if (!c.sgd_check) return;
  const auto& g = *c.sgd_check;
  const std::string base = "sgd_check";
  if (g.problem != "quadratic" && g.problem != "logistic") {
    throw ValidationError(base + ".problem", "expected 'quadratic' or 'logistic'");
  }
  if (g.dimension < 1) throw ValidationError(base + ".dimension", "must be positive");
  if (!(g.mu > 0.0)) throw ValidationError(base + ".mu", "must be positive");
  if (!(g.noise_scale >= 0.0)) throw ValidationError(base + ".noise_scale", "must be non-negative");
  if (!(g.initial_distance >= 0.0)) throw ValidationError(base + ".initial_distance", "must be non-negative");
  if (g.bound.gamma_mu.empty()) throw ValidationError(base + ".bound.gamma_mu", "at least one step size is required");
  for (std::size_t i = 0; i < g.bound.gamma_mu.size(); ++i) {
    const double gm = g.bound.gamma_mu[i];
    if (!(gm > 0.0 && gm < 1.0)) {
      throw ValidationError(detail::index_path(base + ".bound.gamma_mu", i),
                            "step size gamma must lie in (0, 1/mu); got gamma*mu = " + std::to_string(gm));
    }
  }
  if (g.bound.seeds < 2) throw ValidationError(base + ".bound.seeds", "must be at least 2");
  if (g.bound.iterations < 1) throw ValidationError(base + ".bound.iterations", "must be at least 1");
  if (g.bound.noise_draws < 100) throw ValidationError(base + ".bound.noise_draws", "must be at least 100");
  if (g.bound.total_budget < static_cast<std::int64_t>(c.n_workers)) {
    throw ValidationError(base + ".bound.total_budget", "must be at least n_workers");
  }
  if (g.sample_count < g.bound.total_budget) {
    throw ValidationError(base + ".sample_count", "must be at least bound.total_budget");
  }
  if (g.variance.m_values.empty()) throw ValidationError(base + ".variance.m_values", "must not be empty");
  for (std::size_t i = 0; i < g.variance.m_values.size(); ++i) {
    if (g.variance.m_values[i] < 1 || (i > 0 && g.variance.m_values[i] <= g.variance.m_values[i - 1])) {
      throw ValidationError(detail::index_path(base + ".variance.m_values", i), "must be positive and increasing");
    }
  }
  if (g.variance.draws < 100) throw ValidationError(base + ".variance.draws", "must be at least 100");
  if (!(g.variance.ratio_tolerance > 0.0)) throw ValidationError(base + ".variance.ratio_tolerance", "must be positive");
  const auto& q = g.equivalence;
  if (q.dimension < 1) throw ValidationError(base + ".equivalence.dimension", "must be positive");
  if (q.total_budget < static_cast<std::int64_t>(c.n_workers)) {
    throw ValidationError(base + ".equivalence.total_budget", "must be at least n_workers");
  }
  if (q.sample_count < q.total_budget) {
    throw ValidationError(base + ".equivalence.sample_count", "must be at least equivalence.total_budget");
  }
  if (q.seeds < 2) throw ValidationError(base + ".equivalence.seeds", "must be at least 2");
  if (q.iterations < 1) throw ValidationError(base + ".equivalence.iterations", "must be at least 1");
  if (!(q.gamma_mu > 0.0 && q.gamma_mu < 1.0)) {
    throw ValidationError(base + ".equivalence.gamma_mu", "step size gamma must lie in (0, 1/mu)");
  }
  if (!(q.momentum >= 0.0 && q.momentum < 1.0)) {
    throw ValidationError(base + ".equivalence.momentum", "must lie in [0, 1)");
  }
  if (!(q.relative_tolerance > 0.0)) {
    throw ValidationError(base + ".equivalence.relative_tolerance", "must be positive");
  }
}

inline ScenarioConfig config_from_json(const json& j) {
  detail::ObjectReader r(j, "");
  ScenarioConfig c;
  c.name = r.get<std::string>("name");
  c.description = r.get_or<std::string>("description", "");
  c.n_workers = r.get<std::size_t>("n_workers");
  c.worker_costs = r.get<std::vector<double>>("worker_costs");
  c.per_iteration_overhead = r.get_or<double>("per_iteration_overhead", 0.0);
  c.dataset_size = r.get<std::int64_t>("dataset_size");
  c.total_budget = r.get<std::int64_t>("total_budget");
  c.n_epochs = r.get<int>("n_epochs");
  c.seed = r.get_or<std::uint64_t>("seed", 0);
  c.timing_jitter = r.get_or<double>("timing_jitter", 0.0);
  if (r.has("sync_cost")) {
    detail::ObjectReader s(r.raw("sync_cost"), "sync_cost");
    c.sync_cost_per_round = s.get_or<double>("per_round", c.sync_cost_per_round);
    c.sync_cost_per_worker = s.get_or<double>("per_worker", c.sync_cost_per_worker);
    s.finish();
  } else {
    r.mark("sync_cost");
  }
  if (r.has("disturbances")) {
    const auto& list = r.raw("disturbances");
    if (!list.is_array()) throw ValidationError("disturbances", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      c.disturbances.push_back(detail::parse_disturbance(list[i], detail::index_path("disturbances", i)));
    }
  } else {
    r.mark("disturbances");
  }
  const auto& strategies = r.raw("strategies");
  if (!strategies.is_array()) throw ValidationError("strategies", "expected an array");
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    c.strategies.push_back(detail::parse_strategy(strategies[i], detail::index_path("strategies", i), c));
  }
  if (r.has("sgd_check")) {
    c.sgd_check = detail::parse_sgd_check(r.raw("sgd_check"), "sgd_check");
  } else {
    r.mark("sgd_check");
  }
  r.finish();
  validate(c);
  return c;
}

/// Parses config text (JSON; // and /* */ comments allowed) and validates it.
inline ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    const auto [line, column] = detail::line_column(text, e.byte);
    std::string what = e.what();
    if (const auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ParseError(origin, line, column, what);
  }
  return config_from_json(j);
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

inline json to_json(const ScenarioConfig& c) {
  json disturbances = json::array();
  for (const auto& d : c.disturbances) {
    json e = {{"worker", d.worker},
              {"start_epoch", d.event.start_epoch},
              {"end_epoch", d.event.end_epoch ? json(*d.event.end_epoch) : json(nullptr)}};
    if (d.event.kind == sim::DisturbanceEvent::Kind::additive) {
      e["extra_epoch_seconds"] = d.event.value;
    } else {
      e["cost_multiplier"] = d.event.value;
    }
    disturbances.push_back(std::move(e));
  }
  json strategies = json::array();
  for (const auto& s : c.strategies) {
    json e = {{"kind", sim::to_string(s.kind)},
              {"sync_interval", s.sync_interval},
              {"sync_at_epoch_end", s.sync_at_epoch_end},
              {"perf_smoothing", s.perf_smoothing}};
    if (!s.label.empty()) e["label"] = s.label;
    if (s.sync_cost_per_round != c.sync_cost_per_round || s.sync_cost_per_worker != c.sync_cost_per_worker) {
      e["sync_cost"] = {{"per_round", s.sync_cost_per_round}, {"per_worker", s.sync_cost_per_worker}};
    }
    strategies.push_back(std::move(e));
  }
  json out = {{"name", c.name},
              {"description", c.description},
              {"n_workers", c.n_workers},
              {"worker_costs", c.worker_costs},
              {"per_iteration_overhead", c.per_iteration_overhead},
              {"dataset_size", c.dataset_size},
              {"total_budget", c.total_budget},
              {"n_epochs", c.n_epochs},
              {"seed", c.seed},
              {"timing_jitter", c.timing_jitter},
              {"sync_cost", {{"per_round", c.sync_cost_per_round}, {"per_worker", c.sync_cost_per_worker}}},
              {"disturbances", std::move(disturbances)},
              {"strategies", std::move(strategies)}};
  if (c.sgd_check) {
    const auto& g = *c.sgd_check;
    out["sgd_check"] = {
        {"problem", g.problem},
        {"dimension", g.dimension},
        {"mu", g.mu},
        {"noise_scale", g.noise_scale},
        {"sample_count", g.sample_count},
        {"initial_distance", g.initial_distance},
        {"separation", g.separation},
        {"seed", g.seed},
        {"bound",
         {{"gamma_mu", g.bound.gamma_mu},
          {"seeds", g.bound.seeds},
          {"iterations", g.bound.iterations},
          {"total_budget", g.bound.total_budget},
          {"noise_draws", g.bound.noise_draws}}},
        {"variance",
         {{"m_values", g.variance.m_values}, {"draws", g.variance.draws}, {"ratio_tolerance", g.variance.ratio_tolerance}}},
        {"equivalence",
         {{"dimension", g.equivalence.dimension},
          {"sample_count", g.equivalence.sample_count},
          {"total_budget", g.equivalence.total_budget},
          {"seeds", g.equivalence.seeds},
          {"iterations", g.equivalence.iterations},
          {"gamma_mu", g.equivalence.gamma_mu},
          {"momentum", g.equivalence.momentum},
          {"relative_tolerance", g.equivalence.relative_tolerance}}}};
  }
  return out;
}

inline std::vector<sim::WorkerProfile> make_profiles(const ScenarioConfig& c) {
  auto profiles = sim::make_profiles(c.worker_costs, c.per_iteration_overhead);
  for (const auto& d : c.disturbances) profiles[d.worker].disturbances.push_back(d.event);
  return profiles;
}

// ---------------------------------------------------------------------------
// Builtin catalog

/// fastest * spread^(k / (n - 1)) for k = 0..n-1: fastest-to-slowest ratio 1:spread.
inline std::vector<double> geometric_costs(std::size_t n, double fastest, double spread = 2.0) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = n > 1 ? static_cast<double>(k) / static_cast<double>(n - 1) : 0.0;
    out.push_back(fastest * std::pow(spread, t));
  }
  return out;
}

struct BuiltinScenario {
  std::string name;
  std::string description;
  std::string mirrors;  // the experiment the scenario reproduces at desk scale
  ScenarioConfig config;
};

namespace detail {

inline sim::StrategyConfig strategy(sim::StrategyKind kind, std::int64_t budget, int interval = 1) {
  sim::StrategyConfig s;
  s.kind = kind;
  s.total_budget = budget;
  s.sync_interval = interval;
  return s;
}

inline ScenarioConfig base_config(std::string name, std::size_t n, std::vector<double> costs, int epochs) {
  ScenarioConfig c;
  c.name = std::move(name);
  c.n_workers = n;
  c.worker_costs = std::move(costs);
  c.dataset_size = 50000;
  c.total_budget = 512;
  c.n_epochs = epochs;
  c.seed = 1;
  c.strategies = {strategy(sim::StrategyKind::fixed_ssgd, c.total_budget),
                  strategy(sim::StrategyKind::dbs, c.total_budget)};
  return c;
}

inline std::vector<DisturbanceSpec> staggered_disturbances() {
  return {{0, sim::DisturbanceEvent::additive(10, 10.0)},
          {1, sim::DisturbanceEvent::additive(21, 10.0)},
          {2, sim::DisturbanceEvent::additive(31, 10.0)}};
}

}  // namespace detail

inline constexpr double kScaleFastestCost = 0.001;       // s/sample, scaling scenarios
inline constexpr double kRobustnessFastestCost = 0.003;  // s/sample, disturbance scenarios

inline std::vector<BuiltinScenario> builtin_scenarios() {
  using sim::StrategyKind;
  std::vector<BuiltinScenario> out;

  for (std::size_t n : {4u, 8u, 16u}) {
    auto c = detail::base_config("scale" + std::to_string(n), n, geometric_costs(n, kScaleFastestCost), 50);
    c.description = std::to_string(n) + " workers, 1:2 speed spread, fixed S-SGD vs DBS over 50 epochs";
    out.push_back({c.name, c.description, "scaling experiment: whole and compute time per epoch, n=" + std::to_string(n),
                   c});
  }

  {
    auto c = detail::base_config("robustness", 4, geometric_costs(4, kRobustnessFastestCost), 50);
    c.disturbances = detail::staggered_disturbances();
    c.description = "4 workers, +10 s per epoch on workers 0/1/2 from epochs 10/21/31, fixed S-SGD vs DBS";
    out.push_back({c.name, c.description, "robustness experiment: compute time under disturbance", c});
  }
  {
    auto c = detail::base_config("homogeneous", 4, std::vector<double>(4, kRobustnessFastestCost), 50);
    c.description = "4 identical workers; DBS must reproduce the even plan";
    out.push_back({c.name, c.description, "fixed point of the scheduler (no heterogeneity)", c});
  }
  {
    auto c = detail::base_config("model_averaging", 4, geometric_costs(4, kRobustnessFastestCost), 50);
    c.disturbances = detail::staggered_disturbances();
    c.strategies = {detail::strategy(StrategyKind::fixed_ssgd, c.total_budget),
                    detail::strategy(StrategyKind::model_averaging, c.total_budget, 8),
                    detail::strategy(StrategyKind::dbs, c.total_budget)};
    c.description = "robustness cluster; S-SGD, model averaging every 8 iterations, DBS";
    out.push_back({c.name, c.description, "model-averaging robustness comparison (sync period 8)", c});
  }
  {
    auto c = detail::base_config("one_shot", 4, geometric_costs(4, kRobustnessFastestCost), 50);
    c.disturbances = detail::staggered_disturbances();
    c.strategies = {detail::strategy(StrategyKind::fixed_ssgd, c.total_budget),
                    detail::strategy(StrategyKind::one_shot, c.total_budget),
                    detail::strategy(StrategyKind::dbs, c.total_budget)};
    c.description = "robustness cluster; S-SGD, one-shot averaging, DBS";
    out.push_back({c.name, c.description, "one-shot averaging robustness comparison", c});
  }
  {
    auto c = detail::base_config("sgd_convergence", 4, geometric_costs(4, kScaleFastestCost), 10);
    c.sgd_check = SgdCheckConfig{};
    c.description = "convergence bound, mini-batch variance sweep, and DBS vs fixed batch SGD on a quadratic";
    out.push_back({c.name, c.description, "convergence comparison of DBS and S-SGD (accuracy vs epoch)", c});
  }
  return out;
}

inline std::optional<ScenarioConfig> find_builtin(const std::string& name) {
  for (auto& b : builtin_scenarios()) {
    if (b.name == name) return b.config;
  }
  return std::nullopt;
}

inline void list_scenarios(std::ostream& out) {
  const auto catalog = builtin_scenarios();
  std::size_t width = 0;
  for (const auto& b : catalog) width = std::max(width, b.name.size());
  for (const auto& b : catalog) {
    out << std::left << std::setw(static_cast<int>(width)) << b.name << "  " << b.description << "\n"
        << std::string(width + 2, ' ') << "mirrors: " << b.mirrors << "\n";
  }
}

// ---------------------------------------------------------------------------
// Running

struct StrategyRun {
  sim::StrategyConfig strategy;
  std::vector<sim::EpochStats> stats;
  report::RunReport report;
};

struct ScenarioResult {
  std::vector<StrategyRun> runs;
  std::string baseline;
  std::vector<report::ComparisonRow> comparison;

  const StrategyRun* find(const std::string& strategy_name) const {
    for (const auto& r : runs) {
      if (r.report.strategy == strategy_name) return &r;
    }
    return nullptr;
  }
};

inline std::string baseline_strategy(const ScenarioConfig& c) {
  for (const auto& s : c.strategies) {
    if (s.kind == sim::StrategyKind::fixed_ssgd) return s.name();
  }
  return c.strategies.front().name();
}

/// Runs every strategy over identical profiles and seed. With `parallel`,
/// strategies run concurrently; results are identical either way.
inline ScenarioResult simulate_scenario(const ScenarioConfig& c, bool parallel = false) {
  validate(c);
  const auto profiles = make_profiles(c);
  const sim::SimOptions options{c.timing_jitter};

  auto run_one = [&](const sim::StrategyConfig& s) {
    StrategyRun run;
    run.strategy = s;
    run.stats = sim::run_training(profiles, s, c.dataset_size, c.n_epochs, c.seed, options);
    run.report = report::make_run_report(c.name, s.name(), c.seed, run.stats);
    return run;
  };

  ScenarioResult result;
  if (parallel) {
    std::vector<std::future<StrategyRun>> futures;
    for (const auto& s : c.strategies) futures.push_back(std::async(std::launch::async, run_one, s));
    for (auto& f : futures) result.runs.push_back(f.get());
  } else {
    for (const auto& s : c.strategies) result.runs.push_back(run_one(s));
  }

  result.baseline = baseline_strategy(c);
  std::vector<report::RunReport> reports;
  for (const auto& r : result.runs) reports.push_back(r.report);
  result.comparison = report::compare_strategies(reports, result.baseline);
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    result.runs[i].report.totals.savings_vs_baseline_percent = result.comparison[i].savings_percent;
  }
  return result;
}

inline std::filesystem::path csv_path(const std::filesystem::path& dir, const std::string& scenario,
                                      const std::string& strategy) {
  return dir / (scenario + "__" + strategy + ".csv");
}

inline std::filesystem::path json_path(const std::filesystem::path& dir, const std::string& scenario) {
  return dir / (scenario + ".json");
}

inline std::filesystem::path check_json_path(const std::filesystem::path& dir, const std::string& scenario) {
  return dir / (scenario + "_check.json");
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(Errc::io, "cannot create output directory " + dir.string());
  }
}

/// Writes one CSV per strategy plus the combined JSON and prints the
/// comparison table. Returns an ExitCode.
inline int run_scenario(const ScenarioConfig& c, const std::filesystem::path& output_dir, std::ostream& out,
                        bool parallel = false) {
  const auto result = simulate_scenario(c, parallel);
  ensure_directory(output_dir);
  std::vector<report::RunReport> reports;
  for (const auto& r : result.runs) {
    report::write_epoch_csv(r.report, csv_path(output_dir, c.name, r.report.strategy));
    reports.push_back(r.report);
  }
  report::write_run_json(reports, {}, json_path(output_dir, c.name));
  out << "scenario " << c.name << " (" << c.n_workers << " workers, " << c.n_epochs << " epochs, seed " << c.seed
      << ")\n";
  report::print_comparison(result.comparison, result.baseline, out);
  return kSuccess;
}

// ---------------------------------------------------------------------------
// SGD checks

struct SgdCheckOutcome {
  std::vector<report::SgdCheckSummary> summaries;
  bool all_passed = false;
};

namespace detail {

inline sgd::Vector initial_point(const sgd::Vector& optimum, double distance) {
  const auto d = optimum.size();
  return optimum + sgd::Vector::Constant(d, distance / std::sqrt(static_cast<double>(d)));
}

/// Plans a DBS run would use on this cluster for a dataset of `dataset_size`.
inline std::vector<PartitionPlan> dbs_plan_stream(const ScenarioConfig& c, std::int64_t dataset_size,
                                                  std::int64_t budget, int epochs) {
  auto s = detail::strategy(sim::StrategyKind::dbs, budget);
  s.sync_cost_per_round = c.sync_cost_per_round;
  s.sync_cost_per_worker = c.sync_cost_per_worker;
  const auto stats = sim::run_training(make_profiles(c), s, dataset_size, epochs, c.seed);
  std::vector<PartitionPlan> plans;
  for (const auto& st : stats) plans.push_back(st.plan);
  return plans;
}

template <sgd::ConvexProblem P>
void run_bound_and_variance(const P& problem, const ScenarioConfig& c, SgdCheckOutcome& out) {
  const auto& g = *c.sgd_check;
  const auto x0 = initial_point(problem.optimum(), g.initial_distance);
  const auto fixed = sgd::PlanSource::fixed(even_plan(c.n_workers, g.bound.total_budget, problem.sample_count()));

  for (double gm : g.bound.gamma_mu) {
    const auto r = sgd::check_convergence_bound(problem, gm, c.n_workers, fixed, x0, g.bound.iterations,
                                             g.bound.seeds, g.bound.noise_draws, g.seed);
    report::SgdCheckSummary s;
    char name[64];
    std::snprintf(name, sizeof name, "convergence_bound_gamma_mu_%.2f", gm);
    s.name = name;
    s.passed = r.passed;
    s.measured = r.mean[static_cast<std::size_t>(r.worst_iteration)];
    s.limit = r.bound[static_cast<std::size_t>(r.worst_iteration)] +
              3.0 * r.std_error[static_cast<std::size_t>(r.worst_iteration)];
    s.margin = r.worst_margin;
    s.metrics = {{"gamma_mu", gm},
                 {"sigma_sq", r.sigma_sq},
                 {"initial_sq_dist", r.initial_sq_dist},
                 {"worst_iteration", static_cast<double>(r.worst_iteration)},
                 {"final_mean_sq_dist", r.mean.back()},
                 {"final_bound", r.bound.back()},
                 {"seeds", static_cast<double>(g.bound.seeds)},
                 {"iterations", static_cast<double>(g.bound.iterations)}};
    s.detail = "mean ||x^j - x*||^2 <= bound + 3 SE at every iteration";
    out.summaries.push_back(std::move(s));
  }

  const auto sweep = sgd::check_variance_decay(problem, x0, g.variance.m_values, g.variance.draws, g.seed + 1,
                                       g.variance.ratio_tolerance);
  report::SgdCheckSummary s;
  s.name = "minibatch_variance";
  s.passed = sweep.passed;
  s.measured = sweep.worst_ratio_error;
  s.limit = g.variance.ratio_tolerance;
  s.margin = std::min(g.variance.ratio_tolerance - sweep.worst_ratio_error, sweep.worst_monotone_margin);
  for (const auto& e : sweep.estimates) {
    s.metrics["variance_m" + std::to_string(e.m)] = e.variance;
    s.metrics["std_error_m" + std::to_string(e.m)] = e.std_error;
  }
  s.metrics["worst_monotone_margin"] = sweep.worst_monotone_margin;
  s.detail = std::string("monotone=") + (sweep.monotone ? "yes" : "no") +
             ", variance ratio within tolerance=" + (sweep.ratio_ok ? "yes" : "no");
  out.summaries.push_back(std::move(s));
}

inline void run_equivalence(const ScenarioConfig& c, SgdCheckOutcome& out) {
  const auto& g = *c.sgd_check;
  const auto& q = g.equivalence;
  sgd::QuadraticProblem problem({q.dimension, g.mu, g.noise_scale, q.sample_count}, g.seed + 2);
  const auto x0 = initial_point(problem.optimum(), g.initial_distance);

  const std::int64_t per_epoch = q.sample_count / q.total_budget;
  const int epochs = static_cast<int>(q.iterations / per_epoch) + 2;
  auto dynamic = sgd::PlanSource::stream(dbs_plan_stream(c, q.sample_count, q.total_budget, epochs));
  auto fixed = sgd::PlanSource::fixed(even_plan(c.n_workers, q.total_budget, q.sample_count));

  sgd::SgdConfig config;
  config.step_size = q.gamma_mu / g.mu;
  config.momentum = q.momentum;
  config.n_iterations = q.iterations;
  config.aggregation = sgd::Aggregation::batch_weighted;

  const auto r = sgd::check_dbs_equivalence(problem, config, c.n_workers, fixed, dynamic, x0, q.seeds, g.seed + 3,
                                            q.relative_tolerance, 3.0);
  report::SgdCheckSummary s;
  s.name = "dbs_fixed_equivalence";
  s.passed = r.passed;
  s.measured = r.relative_difference;
  s.limit = q.relative_tolerance;
  s.margin = std::min(q.relative_tolerance - r.relative_difference, 3.0 - r.worst_z);
  s.metrics = {{"final_gap_fixed", r.fixed.final_loss_mean},
               {"final_gap_dynamic", r.dynamic.final_loss_mean},
               {"final_gap_se_fixed", r.fixed.final_loss_se},
               {"final_gap_se_dynamic", r.dynamic.final_loss_se},
               {"worst_trajectory_z", r.worst_z},
               {"worst_iteration", static_cast<double>(r.worst_iteration)},
               {"momentum", q.momentum},
               {"gamma_mu", q.gamma_mu}};
  std::ostringstream detail;
  detail << "dynamic batches [";
  for (std::size_t i = 0; i < r.dynamic_batches.size(); ++i) detail << (i ? "," : "") << r.dynamic_batches[i];
  detail << "] vs fixed [";
  for (std::size_t i = 0; i < r.fixed_batches.size(); ++i) detail << (i ? "," : "") << r.fixed_batches[i];
  detail << "]";
  s.detail = detail.str();
  out.summaries.push_back(std::move(s));
}

}  // namespace detail

inline SgdCheckOutcome run_sgd_checks(const ScenarioConfig& c) {
  validate(c);
  if (!c.sgd_check) throw ValidationError("sgd_check", "scenario has no sgd_check block");
  const auto& g = *c.sgd_check;
  SgdCheckOutcome out;
  if (g.problem == "logistic") {
    sgd::LogisticProblem problem({g.dimension, g.sample_count, g.mu, g.separation}, g.seed);
    detail::run_bound_and_variance(problem, c, out);
  } else {
    sgd::QuadraticProblem problem({g.dimension, g.mu, g.noise_scale, g.sample_count}, g.seed);
    detail::run_bound_and_variance(problem, c, out);
  }
  detail::run_equivalence(c, out);
  out.all_passed = std::all_of(out.summaries.begin(), out.summaries.end(), [](const auto& s) { return s.passed; });
  return out;
}

/// Runs the SGD checks, writes <name>_check.json and prints one line per
/// check. Returns kSuccess iff every check passed.
inline int run_sgd_check(const ScenarioConfig& c, const std::filesystem::path& output_dir, std::ostream& out) {
  const auto outcome = run_sgd_checks(c);
  ensure_directory(output_dir);
  report::write_run_json({}, outcome.summaries, check_json_path(output_dir, c.name));
  for (const auto& s : outcome.summaries) {
    out << (s.passed ? "PASS " : "FAIL ") << s.name << "  measured=" << s.measured << " limit=" << s.limit
        << " margin=" << s.margin << "  " << s.detail << "\n";
  }
  return outcome.all_passed ? kSuccess : kCheckFailure;
}

}  // namespace dbs::scenario
