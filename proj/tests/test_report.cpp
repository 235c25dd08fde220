#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "dbs/cluster_sim.hpp"
#include "dbs/core.hpp"
#include "dbs/report.hpp"

namespace {

using namespace dbs::report;

RunReport sample_report(int epochs, std::size_t workers) {
  RunReport r;
  r.scenario_name = "unit";
  r.strategy = "dbs";
  r.seed = 42;
  for (int e = 0; e < epochs; ++e) {
    EpochRow row;
    row.epoch = e;
    for (std::size_t w = 0; w < workers; ++w) {
      row.per_worker_gpu.push_back(1.0 / 3.0 + static_cast<double>(w) + 0.1 * e);
      row.int_batches.push_back(static_cast<std::int64_t>(10 + w));
    }
    const double top = row.per_worker_gpu.back();
    for (double g : row.per_worker_gpu) row.per_worker_wait.push_back(top - g);
    const auto plan = dbs::make_plan(row.int_batches, 1000, e);
    row.ranges = plan.ranges;
    row.sample_spans = plan.sample_spans;
    row.t_s = 0.123456789;
    row.T_a = top + row.t_s;
    r.epoch_rows.push_back(row);
  }
  r.totals = compute_totals(r.epoch_rows);
  return r;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

TEST(SavingsPercent, Examples) {
  EXPECT_DOUBLE_EQ(savings_percent(88, 100), 12.0);
  EXPECT_DOUBLE_EQ(savings_percent(100, 100), 0.0);
  EXPECT_DOUBLE_EQ(savings_percent(90, 100), 10.0);
}

TEST(SavingsPercent, SignAndScale) {
  EXPECT_LT(savings_percent(110, 100), 0.0);
  EXPECT_GT(savings_percent(90, 100), 0.0);
  for (double c : {1e-3, 0.5, 7.0, 1e4}) EXPECT_NEAR(savings_percent(c * 73.0, c * 91.0), savings_percent(73, 91), 1e-12);
}

TEST(SavingsPercent, RejectsNonPositiveBaseline) {
  try {
    savings_percent(1.0, 0.0);
    FAIL();
  } catch (const dbs::Error& e) {
    EXPECT_EQ(e.code(), dbs::Errc::invalid_baseline);
  }
}

TEST(EpochCsv, RowCounts) {
  std::ostringstream one;
  write_epoch_csv(sample_report(1, 2), one);
  EXPECT_EQ(line_count(one.str()), 3u);
  std::ostringstream empty;
  write_epoch_csv(sample_report(0, 2), empty);
  EXPECT_EQ(empty.str(), std::string(kCsvHeader) + "\n");
}

TEST(EpochCsv, FixedSixDecimals) {
  std::ostringstream out;
  write_epoch_csv(sample_report(1, 1), out);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(row, "0,0,0.333333,0.000000,0.123457,0.456790,10");
}

TEST(EpochCsv, RoundTripTotals) {
  const auto report = sample_report(7, 3);
  std::ostringstream out;
  write_epoch_csv(report, out);
  std::istringstream in(out.str());
  const auto rows = read_epoch_csv(in);
  ASSERT_EQ(rows.size(), 7u);
  const auto totals = compute_totals(rows);
  EXPECT_NEAR(totals.total_Ta, report.totals.total_Ta, 1e-5);
  EXPECT_NEAR(totals.total_wait, report.totals.total_wait, 1e-5);
  EXPECT_EQ(rows[4].int_batches, report.epoch_rows[4].int_batches);
}

TEST(EpochCsv, MalformedInput) {
  std::istringstream bad_header("epoch,worker\n");
  EXPECT_THROW(read_epoch_csv(bad_header), dbs::Error);
  std::istringstream bad_row(std::string(kCsvHeader) + "\n0,0,x,0,0,0,1\n");
  EXPECT_THROW(read_epoch_csv(bad_row), dbs::Error);
  std::istringstream short_row(std::string(kCsvHeader) + "\n0,0,1,2\n");
  EXPECT_THROW(read_epoch_csv(short_row), dbs::Error);
}

TEST(RunJson, EmptyDocument) {
  EXPECT_EQ(run_json({}, {}), R"({"schema_version":1,"scenarios":[],"sgd_checks":[]})");
}

TEST(RunJson, WriteIsByteIdentical) {
  const auto dir = std::filesystem::temp_directory_path() / "dbs_report_test";
  std::filesystem::create_directories(dir);
  const std::vector<RunReport> reports{sample_report(3, 2)};
  SgdCheckSummary check{"variance", true, 0.01, 0.1, 0.09, {{"variance_m1", 2.0}}, "ok"};
  const std::vector<SgdCheckSummary> checks{check};
  write_run_json(reports, checks, dir / "a.json");
  write_run_json(reports, checks, dir / "b.json");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
  EXPECT_EQ(slurp(dir / "a.json").back(), '\n');
  std::filesystem::remove_all(dir);
}

TEST(RunJson, RoundTrip) {
  auto report = sample_report(4, 3);
  report.totals.savings_vs_baseline_percent = 12.5;
  SgdCheckSummary check{"bound", false, 1.0, 2.0, NAN, {{"a", 1.5}, {"b", -3.0}}, "detail"};
  const std::vector<RunReport> reports{report};
  const std::vector<SgdCheckSummary> checks{check};
  const auto doc = parse_run_json(run_json(reports, checks));
  EXPECT_EQ(doc.schema_version, kSchemaVersion);
  ASSERT_EQ(doc.scenarios.size(), 1u);
  EXPECT_EQ(doc.scenarios[0], report);
  ASSERT_EQ(doc.sgd_checks.size(), 1u);
  EXPECT_TRUE(std::isnan(doc.sgd_checks[0].margin));
  EXPECT_EQ(doc.sgd_checks[0].metrics, check.metrics);
  EXPECT_EQ(doc.sgd_checks[0].name, "bound");
}

TEST(RunJson, NestedKeysSorted) {
  const std::vector<RunReport> reports{sample_report(1, 1)};
  const auto text = run_json(reports, {});
  EXPECT_LT(text.find("\"epoch_rows\""), text.find("\"scenario_name\""));
  EXPECT_LT(text.find("\"scenario_name\""), text.find("\"seed\""));
}

TEST(CompareStrategies, Examples) {
  auto fixed = sample_report(1, 1);
  fixed.strategy = "fixed_ssgd";
  fixed.totals.total_Ta = 100.0;
  auto dyn = fixed;
  dyn.strategy = "dbs";
  dyn.totals.total_Ta = 88.0;

  const std::vector<RunReport> only{fixed};
  const auto single = compare_strategies(only, "fixed_ssgd");
  ASSERT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single[0].savings_percent, 0.0);

  const std::vector<RunReport> both{fixed, dyn};
  const auto rows = compare_strategies(both, "fixed_ssgd");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].strategy, "dbs");
  EXPECT_DOUBLE_EQ(rows[1].total_Ta, 88.0);
  EXPECT_DOUBLE_EQ(rows[1].savings_percent, 12.0);

  try {
    compare_strategies(both, "one_shot");
    FAIL();
  } catch (const dbs::Error& e) {
    EXPECT_EQ(e.code(), dbs::Errc::baseline_not_found);
  }

  std::ostringstream table;
  table.precision(9);
  print_comparison(rows, "fixed_ssgd", table);
  EXPECT_NE(table.str().find("12.00"), std::string::npos);
  EXPECT_EQ(table.precision(), 9);
}

TEST(MakeRunReport, MirrorsEpochStats) {
  const auto profiles = dbs::sim::make_profiles(std::vector<double>{0.001, 0.002});
  dbs::sim::StrategyConfig s;
  s.kind = dbs::sim::StrategyKind::dbs;
  s.total_budget = 64;
  const auto stats = dbs::sim::run_training(profiles, s, 6400, 5, 1);
  const auto r = make_run_report("x", s.name(), 1, stats);
  ASSERT_EQ(r.epoch_rows.size(), 5u);
  EXPECT_DOUBLE_EQ(r.totals.total_Ta, dbs::sim::cumulative_times(stats).total_Ta);
  EXPECT_EQ(r.epoch_rows[3].int_batches, stats[3].plan.int_batches);
  EXPECT_EQ(r.epoch_rows[3].sample_spans, stats[3].plan.sample_spans);
  const std::vector<RunReport> reports{r};
  EXPECT_EQ(parse_run_json(run_json(reports, {})).scenarios[0], r);
}

}  // namespace
