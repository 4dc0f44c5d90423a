#include "tickerwatch/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tickerwatch/common.hpp"

namespace tickerwatch {
namespace {

std::map<std::string, std::string> parse_kv(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    std::string key(trim(text.substr(0, eq)));
    std::string value(trim(text.substr(eq + 1)));
    if (key.empty())
      throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

class KvReader {
 public:
  KvReader(const std::map<std::string, std::string>& kv, std::string source)
      : kv_(kv), source_(std::move(source)) {}

  std::string get(const std::string& key, const std::string& fallback = "") const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }
  std::string require(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end() || it->second.empty())
      throw ConfigError(source_ + ": missing required key '" + key + "'");
    return it->second;
  }
  long get_long(const std::string& key, long fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    long v;
    if (!try_parse_long(it->second, v))
      throw ConfigError(source_ + ": key '" + key + "' is not an integer");
    return v;
  }
  double get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    double v;
    if (!try_parse_double(it->second, v))
      throw ConfigError(source_ + ": key '" + key + "' is not a number");
    return v;
  }

 private:
  const std::map<std::string, std::string>& kv_;
  std::string source_;
};

}  // namespace

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_kv(in, path);
}

std::map<std::string, std::string> read_kv_text(const std::string& text,
                                                const std::string& source_name) {
  std::istringstream in(text);
  return parse_kv(in, source_name);
}

bool PipelineConfig::is_meme(const std::string& ticker) const {
  return std::find(meme_tickers.begin(), meme_tickers.end(), ticker) != meme_tickers.end();
}

PipelineConfig parse_pipeline_config(const std::map<std::string, std::string>& kv,
                                     const std::string& source_name, bool strict_paper) {
  KvReader reader(kv, source_name);
  PipelineConfig config;
  config.raw = kv;

  for (const auto& t : split(reader.require("tickers"), ',')) {
    auto ticker = std::string(trim(t));
    if (!ticker.empty()) config.tickers.push_back(ticker);
  }
  if (config.tickers.empty()) throw ConfigError(source_name + ": no tickers listed");
  for (const auto& t : split(reader.get("meme_tickers"), ',')) {
    auto ticker = std::string(trim(t));
    if (!ticker.empty()) config.meme_tickers.push_back(ticker);
  }

  config.date_start = Date::parse(reader.require("date_start"));
  config.date_end = Date::parse(reader.require("date_end"));
  if (config.date_end < config.date_start)
    throw ConfigError(source_name + ": date_end before date_start");

  for (const auto& ticker : config.tickers) {
    config.dumps[ticker] = reader.require("dump." + ticker);
    config.markets[ticker] = reader.require("market." + ticker);
  }
  config.background_dump = reader.get("background_dump");
  config.index_csv = reader.require("index_csv");
  config.exog_csv = reader.get("exog_csv");
  config.activity_csv = reader.get("activity_csv");

  config.alert.window_I = static_cast<int>(reader.get_long("window_I", 10));
  config.alert.min_flags = static_cast<int>(reader.get_long("min_flags", 4));
  config.alert.off_mean = reader.get_double("off_mean", 3.0);
  config.alert.pagerank_window = static_cast<int>(reader.get_long("pagerank_window", 20));
  config.alert.k_indegree = static_cast<int>(reader.get_long("k_indegree", 10));
  config.alert.k_influencers = static_cast<int>(reader.get_long("k_influencers", 20));
  config.alert.min_cascade = static_cast<int>(reader.get_long("min_cascade", 10));
  config.alert.pagerank.damping = reader.get_double("pagerank_damping", 0.85);
  config.alert.pagerank.tol = reader.get_double("pagerank_tol", 1e-9);
  config.alert.pagerank.max_iter = static_cast<int>(reader.get_long("pagerank_max_iter", 200));
  std::string scope = reader.get("user_scope", "both");
  if (scope == "both")
    config.alert.user_scope = AlertConfig::UserScope::both;
  else if (scope == "submitters")
    config.alert.user_scope = AlertConfig::UserScope::submitters;
  else if (scope == "commenters")
    config.alert.user_scope = AlertConfig::UserScope::commenters;
  else
    throw ConfigError(source_name + ": user_scope must be both|submitters|commenters");

  config.event_study.estimation_len = static_cast<int>(reader.get_long("l1", 10));
  config.event_study.pre_days = static_cast<int>(reader.get_long("l2_pre", 10));
  config.event_study.post_days = static_cast<int>(reader.get_long("l2_post", 10));
  config.event_study.min_spacing = static_cast<int>(reader.get_long("event_spacing", 10));
  config.event_study.rank_full_sample = reader.get_long("rank_full_sample", 0) != 0;

  std::string hac = reader.get("hac_lags", "auto");
  if (hac != "auto") config.hac_lags = static_cast<int>(parse_long(hac, "hac_lags"));
  config.ar_rolling_window = static_cast<int>(reader.get_long("ar_rolling_window", 10));
  config.ar_full_sample_fit = reader.get_long("ar_full_sample_fit", 0) != 0;
  for (const auto& path : split(reader.get("regression_specs"), ','))
    if (!trim(path).empty()) config.regression_spec_files.push_back(std::string(trim(path)));

  if (strict_paper) {
    config.alert.mad_absolute = false;
    config.event_study.rank_ascending = false;
  }

  int needed = config.alert.window_I + config.alert.pagerank_window +
               config.event_study.estimation_len + config.event_study.event_window_len();
  if (config.date_end - config.date_start + 1 < needed) {
    // Not fatal: alerts can still run, events will simply be dropped.
    config.raw["warning.range"] =
        "date range shorter than " + std::to_string(needed) + " days; no event can be evaluable";
  }
  return config;
}

PipelineConfig load_pipeline_config(const std::string& path, bool strict_paper) {
  return parse_pipeline_config(read_kv_file(path), path, strict_paper);
}

}  // namespace tickerwatch
