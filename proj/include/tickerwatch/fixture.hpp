#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tickerwatch/dates.hpp"

namespace tickerwatch {

/// Synthetic-scenario knobs. Quiet-day intensities alternate between two
/// exact levels so that only planted bursts can trip the volume screens;
/// the planted influencer posts a qualifying thread every day so the trailing
/// window always ranks them.
struct FixtureScenario {
  std::string ticker = "MEME";
  std::string control_ticker;  // optional quiet ticker with no planted episodes
  Date start = Date::from_ymd(2021, 1, 4);  // a Monday
  int n_days = 120;

  std::vector<int> burst_offsets = {42, 70, 98};  // calendar offsets, weekdays

  std::string influencer = "influencer_prime";
  int influencer_quiet_comments = 12;
  int influencer_burst_comments = 40;

  int quiet_other_subs_even = 7;  // plus the influencer thread: 8 total
  int quiet_other_subs_odd = 11;  // 12 total
  int burst_other_subs = 59;      // 60 total

  double base_price = 20.0;
  double burst_drift = 0.04;  // per trading day over the first drift_days
  int drift_days = 10;
  double base_volume = 1e6;
};

FixtureScenario parse_scenario_file(const std::string& path);

struct FixtureBurstGraph {
  Date day{};
  long nodes = 0;
  long edges = 0;
};

struct FixtureTruth {
  std::string ticker;
  std::string control_ticker;
  std::string influencer;
  std::uint64_t seed = 0;
  std::vector<Date> burst_dates;
  int expected_stage2_alerts = 0;
  int expected_events = 0;
  std::vector<FixtureBurstGraph> burst_graphs;  // planted-day graph shape
  std::string config_path;                      // ready-to-run pipeline config
};

/// Writes the thread dumps, market/index/exogenous CSVs, a ground-truth
/// manifest (truth.json) and a pipeline config into out_dir. Deterministic
/// for a given (scenario, seed). Throws AnalysisError when the scenario is
/// infeasible (bursts inside the warm-up, on weekends, or without room for
/// the event windows).
FixtureTruth generate_fixture(const FixtureScenario& scenario, std::uint64_t seed,
                              const std::string& out_dir);

}  // namespace tickerwatch
