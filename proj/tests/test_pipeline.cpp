#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "tickerwatch/common.hpp"
#include "tickerwatch/config.hpp"
#include "tickerwatch/fixture.hpp"
#include "tickerwatch/csv.hpp"
#include "tickerwatch/pipeline.hpp"

using namespace tickerwatch;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "missing file " << path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("key-value configs parse with comments and validation") {
  auto kv = read_kv_text("# comment\nkey = value\nn = 7\n", "inline");
  CHECK(kv.at("key") == "value");
  CHECK_THROWS_AS(read_kv_text("just words\n", "inline"), ConfigError);

  CHECK_THROWS_AS(parse_pipeline_config(read_kv_text("tickers = \n", "c"), "c", false),
                  ConfigError);
}

TEST_CASE("strict-paper pins the literal readings") {
  std::string text =
      "tickers = MEME\n"
      "date_start = 2021-01-04\n"
      "date_end = 2021-01-20\n"
      "dump.MEME = x.jsonl\n"
      "market.MEME = m.csv\n"
      "index_csv = i.csv\n";
  PipelineConfig relaxed = parse_pipeline_config(read_kv_text(text, "c"), "c", false);
  CHECK(relaxed.alert.mad_absolute);
  CHECK(relaxed.event_study.rank_ascending);
  PipelineConfig literal = parse_pipeline_config(read_kv_text(text, "c"), "c", true);
  CHECK_FALSE(literal.alert.mad_absolute);
  CHECK_FALSE(literal.event_study.rank_ascending);
}

TEST_CASE("fixture generation is deterministic byte for byte") {
  FixtureScenario scenario;
  scenario.n_days = 60;
  scenario.burst_offsets = {42};
  fs::path a = fresh_dir("tw_fix_a");
  fs::path b = fresh_dir("tw_fix_b");
  generate_fixture(scenario, 42, a.string());
  generate_fixture(scenario, 42, b.string());
  for (const char* name :
       {"dump_MEME.jsonl", "dump_background.jsonl", "market_MEME.csv", "index.csv", "exog.csv",
        "truth.json"})
    CHECK(slurp(a / name) == slurp(b / name));
  // a different seed moves the user assignment
  fs::path c = fresh_dir("tw_fix_c");
  generate_fixture(scenario, 43, c.string());
  CHECK(slurp(a / "dump_MEME.jsonl") != slurp(c / "dump_MEME.jsonl"));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("infeasible scenarios are rejected") {
  FixtureScenario warmup;
  warmup.burst_offsets = {5};
  fs::path dir = fresh_dir("tw_fix_bad");
  CHECK_THROWS_AS(generate_fixture(warmup, 1, dir.string()), AnalysisError);

  FixtureScenario weekend;
  weekend.burst_offsets = {40};  // a Saturday for a Monday start
  CHECK_THROWS_AS(generate_fixture(weekend, 1, dir.string()), AnalysisError);

  FixtureScenario cramped;
  cramped.n_days = 40;
  cramped.burst_offsets = {30};
  CHECK_THROWS_AS(generate_fixture(cramped, 1, dir.string()), AnalysisError);
  fs::remove_all(dir);
}

TEST_CASE("a quiet scenario produces zero alerts through the pipeline") {
  fs::path dir = fresh_dir("tw_quiet");
  FixtureScenario scenario;
  scenario.n_days = 50;
  scenario.burst_offsets = {};
  FixtureTruth truth = generate_fixture(scenario, 7, dir.string());
  PipelineConfig config = load_pipeline_config(truth.config_path);
  fs::path run = dir / "run";
  cmd_ingest(config, run.string());
  cmd_alert(config, run.string());
  auto alerts = read_alert_report((run / "alert" / "alerts.csv").string());
  CHECK(alerts.size() == 50);
  for (const auto& row : alerts) {
    CHECK_FALSE(row.stage1_on);
    CHECK_FALSE(row.stage2_on);
  }
  fs::remove_all(dir);
}

TEST_CASE("the planted scenario flows through every stage") {
  fs::path dir = fresh_dir("tw_planted");
  FixtureScenario scenario;  // defaults: 3 bursts over 120 days
  FixtureTruth truth = generate_fixture(scenario, 42, dir.string());
  REQUIRE(truth.expected_stage2_alerts == 3);
  REQUIRE(truth.expected_events == 3);

  // One user-supplied specification rides along with the standing ones.
  {
    std::ofstream spec(dir / "custom.spec");
    spec << "name = custom_av\ndependent = AV\nregressor = Vol : diff\n"
         << "regressor = ABN : level\nhac_lags = 2\n";
    std::ofstream cfg(truth.config_path, std::ios::app);
    cfg << "regression_specs = " << (dir / "custom.spec").string() << "\n";
  }
  PipelineConfig config = load_pipeline_config(truth.config_path);
  REQUIRE(config.regression_spec_files.size() == 1);
  fs::path run = dir / "run";
  cmd_ingest(config, run.string());
  cmd_alert(config, run.string());
  cmd_eventstudy(config, run.string());
  cmd_regress(config, run.string());
  cmd_report(config, run.string());

  auto alerts = read_alert_report((run / "alert" / "alerts.csv").string());
  int stage2 = 0;
  for (const auto& row : alerts)
    if (row.stage2_on) {
      ++stage2;
      REQUIRE(!row.influencers.empty());
      bool named = false;
      for (const auto& user : row.influencers) named = named || user == truth.influencer;
      CHECK(named);
      CHECK(std::find(truth.burst_dates.begin(), truth.burst_dates.end(), row.day) !=
            truth.burst_dates.end());
    }
  CHECK(stage2 == truth.expected_stage2_alerts);

  // Every stage left its manifest and primary outputs behind.
  for (const char* rel :
       {"ingest/manifest.json", "alert/manifest.json", "eventstudy/manifest.json",
        "regress/manifest.json", "report/manifest.json", "alert/graphs/edges_MEME.csv",
        "eventstudy/events_MEME.csv", "report/summary.csv", "report/chart_MEME.svg",
        "regress/reg_ar_contemporaneous_MEME.csv", "regress/reg_av_contemporaneous_MEME.csv",
        "regress/reg_ar_predictive_MEME.csv", "regress/reg_custom_av_MEME.csv"})
    CHECK_MESSAGE(fs::exists(run / rel), rel);

  // Event charts carry the event marker and the dashed reference lines.
  for (Date d : truth.burst_dates) {
    fs::path chart = run / "eventstudy" / ("chart_event_MEME_" + d.to_string() + ".svg");
    if (!fs::exists(chart)) continue;  // only retained events have charts
    std::string svg = slurp(chart);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
    CHECK(svg.find("#c53030") != std::string::npos);
  }

  // Event tables exist for the retained events, 21 data rows each.
  int event_tables = 0;
  for (const auto& entry : fs::directory_iterator(run / "eventstudy")) {
    auto name = entry.path().filename().string();
    if (name.rfind("event_MEME_", 0) == 0 && entry.path().extension() == ".csv") {
      ++event_tables;
      std::string text = slurp(entry.path());
      CHECK(std::count(text.begin(), text.end(), '\n') == 22);
    }
  }
  CHECK(event_tables == truth.expected_events);
  fs::remove_all(dir);
}

TEST_CASE("external forum totals must cover the configured range") {
  fs::path dir = fresh_dir("tw_totals");
  FixtureScenario scenario;
  scenario.n_days = 40;
  scenario.burst_offsets = {};
  FixtureTruth truth = generate_fixture(scenario, 3, dir.string());
  {
    std::ofstream activity(dir / "activity.csv");
    activity << "date,total_submissions,total_users\n";
    for (int i = 0; i < 20; ++i)  // only half the range
      activity << (scenario.start + i).to_string() << ",500,5000\n";
    std::ofstream cfg(truth.config_path, std::ios::app);
    cfg << "activity_csv = " << (dir / "activity.csv").string() << "\n";
  }
  PipelineConfig config = load_pipeline_config(truth.config_path);
  CHECK_THROWS_WITH_AS(cmd_ingest(config, (dir / "run").string()),
                       doctest::Contains("no forum totals"), InputError);
  fs::remove_all(dir);
}

TEST_CASE("a control ticker stays silent while the watched ticker confirms") {
  fs::path dir = fresh_dir("tw_control");
  FixtureScenario scenario;
  scenario.control_ticker = "CTRL";
  FixtureTruth truth = generate_fixture(scenario, 42, dir.string());
  PipelineConfig config = load_pipeline_config(truth.config_path);
  REQUIRE(config.tickers == std::vector<std::string>{"MEME", "CTRL"});
  CHECK(config.is_meme("MEME"));
  CHECK_FALSE(config.is_meme("CTRL"));

  fs::path run = dir / "run";
  cmd_ingest(config, run.string());
  cmd_alert(config, run.string());
  cmd_eventstudy(config, run.string());
  cmd_report(config, run.string());

  auto alerts = read_alert_report((run / "alert" / "alerts.csv").string());
  int meme_stage2 = 0;
  for (const auto& row : alerts) {
    if (row.ticker == "CTRL") {
      CHECK_FALSE(row.stage1_on);
      CHECK_FALSE(row.stage2_on);
    } else if (row.stage2_on) {
      ++meme_stage2;
    }
  }
  CHECK(meme_stage2 == truth.expected_stage2_alerts);

  // The summary covers both tickers; only the watched one has events.
  std::string summary = slurp(run / "report" / "summary.csv");
  CHECK(summary.find("MEME,") != std::string::npos);
  CHECK(summary.find("CTRL,") != std::string::npos);
  CHECK(fs::exists(run / "eventstudy" / "events_CTRL.csv"));
  CsvTable ctrl_events = read_csv_file((run / "eventstudy" / "events_CTRL.csv").string());
  CHECK(ctrl_events.rows.empty());
  fs::remove_all(dir);
}

#ifdef TICKERWATCH_BIN
TEST_CASE("the command line maps error classes to distinct exit codes") {
  fs::path dir = fresh_dir("tw_cli");
  std::string bin = TICKERWATCH_BIN;
  auto run_cmd = [&](const std::string& args) {
    std::string cmd = bin + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };

  SUBCASE("fixture then full pipeline succeeds") {
    fs::path fix = dir / "fixture";
    std::ofstream scenario(dir / "scenario.cfg");
    scenario << "n_days = 60\nburst_offsets = 42\n";
    scenario.close();
    CHECK(run_cmd("fixture --scenario " + (dir / "scenario.cfg").string() + " --seed 42 -o " +
                  fix.string()) == 0);
    std::string config = (fix / "config.cfg").string();
    std::string out = (dir / "run").string();
    CHECK(run_cmd("ingest -c " + config + " -o " + out) == 0);
    CHECK(run_cmd("alert -c " + config + " -o " + out) == 0);
    CHECK(run_cmd("eventstudy -c " + config + " -o " + out) == 0);
    CHECK(run_cmd("regress -c " + config + " -o " + out) == 0);
    CHECK(run_cmd("report -c " + config + " -o " + out) == 0);
  }
  SUBCASE("a missing config file is a config error") {
    CHECK(run_cmd("alert -c /nonexistent.cfg -o " + (dir / "x").string()) == 3);
  }
  SUBCASE("bad market data is an input error") {
    std::ofstream bad(dir / "bad_market.csv");
    bad << "date,open,close,volume\n2021-01-04,-1,5,10\n";
    bad.close();
    std::ofstream dump(dir / "empty.jsonl");
    dump.close();
    std::ofstream index(dir / "index.csv");
    index << "date,return\n2021-01-04,0\n";
    index.close();
    std::ofstream cfg(dir / "cfg.cfg");
    cfg << "tickers = T\ndate_start = 2021-01-04\ndate_end = 2021-01-08\n"
        << "dump.T = " << (dir / "empty.jsonl").string() << "\n"
        << "market.T = " << (dir / "bad_market.csv").string() << "\n"
        << "index_csv = " << (dir / "index.csv").string() << "\n";
    cfg.close();
    CHECK(run_cmd("ingest -c " + (dir / "cfg.cfg").string() + " -o " + (dir / "y").string()) ==
          2);
  }
  SUBCASE("an infeasible fixture scenario is an analysis error") {
    std::ofstream scenario(dir / "bad_scenario.cfg");
    scenario << "n_days = 30\nburst_offsets = 5\n";
    scenario.close();
    CHECK(run_cmd("fixture --scenario " + (dir / "bad_scenario.cfg").string() + " -o " +
                  (dir / "z").string()) == 4);
  }
  fs::remove_all(dir);
}
#endif
