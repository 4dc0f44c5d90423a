#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tickerwatch/alert.hpp"
#include "tickerwatch/dates.hpp"
#include "tickerwatch/event_study.hpp"

namespace tickerwatch {

/// Flat `key = value` document with '#' comments. Repeating a key overrides.
std::map<std::string, std::string> read_kv_file(const std::string& path);
std::map<std::string, std::string> read_kv_text(const std::string& text,
                                                const std::string& source_name);

struct PipelineConfig {
  std::vector<std::string> tickers;
  std::vector<std::string> meme_tickers;
  Date date_start{};
  Date date_end{};

  std::map<std::string, std::string> dumps;    // ticker -> thread dump path
  std::map<std::string, std::string> markets;  // ticker -> market CSV path
  std::string background_dump;                 // optional; whole-forum totals
  std::string index_csv;
  std::string exog_csv;
  std::string activity_csv;  // optional external totals: date,total_submissions,total_users

  AlertConfig alert{};
  EventStudyConfig event_study{};
  std::optional<int> hac_lags;  // nullopt = automatic
  int ar_rolling_window = 10;
  bool ar_full_sample_fit = false;
  std::vector<std::string> regression_spec_files;  // extra user specifications

  std::map<std::string, std::string> raw;  // echoed into manifests

  bool is_meme(const std::string& ticker) const;
};

/// Parses and validates the pipeline configuration; `strict_paper` pins every
/// discretionary choice to its most literal reading (signed deviations in the
/// rolling threshold, descending rank direction).
PipelineConfig load_pipeline_config(const std::string& path, bool strict_paper = false);
PipelineConfig parse_pipeline_config(const std::map<std::string, std::string>& kv,
                                     const std::string& source_name, bool strict_paper = false);

}  // namespace tickerwatch
