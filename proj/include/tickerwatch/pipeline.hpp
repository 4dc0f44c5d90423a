#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tickerwatch/config.hpp"
#include "tickerwatch/fixture.hpp"

namespace tickerwatch {

/// Stage entry points behind the CLI subcommands. Every stage reads only the
/// previous stage's persisted outputs under the same run directory, writes
/// its own files plus a manifest.json, and throws on failure (the CLI maps
/// exception classes to exit codes).
void cmd_ingest(const PipelineConfig& config, const std::string& run_dir);
void cmd_alert(const PipelineConfig& config, const std::string& run_dir);
void cmd_eventstudy(const PipelineConfig& config, const std::string& run_dir);
void cmd_regress(const PipelineConfig& config, const std::string& run_dir);
void cmd_report(const PipelineConfig& config, const std::string& run_dir);
FixtureTruth cmd_fixture(const FixtureScenario& scenario, std::uint64_t seed,
                         const std::string& out_dir);

/// Deterministic run directory stamp derived from the configuration bytes.
std::string run_stamp(const std::string& config_text, std::uint64_t seed, bool strict_paper);

/// Minimal alert rows read back from alerts.csv; enough to drive the event
/// study and the reports.
struct AlertRow {
  Date day{};
  std::string ticker;
  bool stage1_on = false;
  bool stage2_on = false;
  std::vector<std::string> influencers;
};

std::vector<AlertRow> read_alert_report(const std::string& path);

}  // namespace tickerwatch
