#include "tickerwatch/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tickerwatch/alert.hpp"
#include "tickerwatch/common.hpp"
#include "tickerwatch/csv.hpp"
#include "tickerwatch/event_study.hpp"
#include "tickerwatch/graph.hpp"
#include "tickerwatch/regression.hpp"
#include "tickerwatch/svg.hpp"

namespace fs = std::filesystem;

namespace tickerwatch {
namespace {

std::string stage_dir(const std::string& run_dir, const std::string& stage) {
  fs::path p = fs::path(run_dir) / stage;
  fs::create_directories(p);
  return p.string();
}

void write_manifest(const std::string& dir, const nlohmann::json& manifest) {
  std::ofstream out(fs::path(dir) / "manifest.json");
  out << manifest.dump(2) << '\n';
}

std::map<Date, std::vector<ConversationTree>> group_by_day(std::vector<ConversationTree> trees) {
  std::map<Date, std::vector<ConversationTree>> by_day;
  for (auto& tree : trees) by_day[tree.day].push_back(std::move(tree));
  return by_day;
}

/// Whole-forum totals computed from every ingested dump; trees are deduped
/// by id so a thread mentioning two watched tickers counts once.
std::map<Date, DayTotals> totals_from_dumps(
    const std::vector<const std::vector<ConversationTree>*>& dumps) {
  std::map<Date, std::set<std::string>> users_by_day;
  std::map<Date, long> anonymous_by_day;
  std::map<Date, long> subs_by_day;
  std::map<Date, std::set<std::string>> seen_trees;

  for (const auto* trees : dumps) {
    for (const auto& tree : *trees) {
      if (!seen_trees[tree.day].insert(tree.tree_id).second) continue;
      ++subs_by_day[tree.day];
      for (const auto& node : tree.nodes) {
        if (is_sentinel_author(node.author))
          ++anonymous_by_day[tree.day];
        else
          users_by_day[tree.day].insert(node.author);
      }
    }
  }
  std::map<Date, DayTotals> totals;
  for (const auto& [day, subs] : subs_by_day) {
    totals[day].submissions = subs;
    totals[day].users =
        static_cast<long>(users_by_day[day].size()) + anonymous_by_day[day];
  }
  return totals;
}

std::map<Date, DayTotals> totals_from_csv(const std::string& path) {
  CsvTable table = read_csv_file(path);
  int c_date = table.column("date"), c_subs = table.column("total_submissions"),
      c_users = table.column("total_users");
  std::map<Date, DayTotals> totals;
  for (const auto& row : table.rows) {
    Date d = Date::parse(row[c_date]);
    totals[d].submissions = parse_long(row[c_subs], path + " total_submissions");
    totals[d].users = parse_long(row[c_users], path + " total_users");
  }
  return totals;
}

MarketSeries load_normalized_market(const std::string& run_dir, const std::string& ticker) {
  fs::path path = fs::path(run_dir) / "ingest" / ("market_" + ticker + ".csv");
  if (!fs::exists(path))
    throw InputError("missing '" + path.string() + "'; run the ingest stage first");
  MarketSeries series = load_market_csv_file(path.string(), ticker);
  if (!series.has_market_return)
    throw InputError(path.string() + ": no index_return column; re-run ingest");
  return series;
}

std::map<Date, std::vector<ConversationTree>> load_normalized_trees(const std::string& run_dir,
                                                                    const std::string& ticker) {
  fs::path path = fs::path(run_dir) / "ingest" / ("trees_" + ticker + ".csv");
  if (!fs::exists(path))
    throw InputError("missing '" + path.string() + "'; run the ingest stage first");
  return group_by_day(read_trees_csv_file(path.string()));
}

std::vector<DailyActivity> load_activity(const std::string& run_dir, const std::string& ticker) {
  fs::path path = fs::path(run_dir) / "ingest" / "activity.csv";
  if (!fs::exists(path))
    throw InputError("missing '" + path.string() + "'; run the ingest stage first");
  CsvTable table = read_csv_file(path.string());
  int c_day = table.column("day"), c_ticker = table.column("ticker"),
      c_ts = table.column("ticker_submissions"), c_tu = table.column("ticker_users"),
      c_as = table.column("total_submissions"), c_au = table.column("total_users");
  std::vector<DailyActivity> rows;
  for (const auto& row : table.rows) {
    if (row[c_ticker] != ticker) continue;
    DailyActivity a;
    a.day = Date::parse(row[c_day]);
    a.ticker = ticker;
    a.ticker_submissions = parse_long(row[c_ts], "ticker_submissions");
    a.ticker_users = parse_long(row[c_tu], "ticker_users");
    a.total_submissions = parse_long(row[c_as], "total_submissions");
    a.total_users = parse_long(row[c_au], "total_users");
    rows.push_back(a);
  }
  return rows;
}

}  // namespace

std::string run_stamp(const std::string& config_text, std::uint64_t seed, bool strict_paper) {
  std::uint64_t h = fnv1a64(config_text) ^ (seed * 0x9E3779B97F4A7C15ull) ^
                    (strict_paper ? 0x5851F42D4C957F2Dull : 0);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "run-%08llx", static_cast<unsigned long long>(h & 0xffffffffull));
  return buf;
}

void cmd_ingest(const PipelineConfig& config, const std::string& run_dir) {
  std::string dir = stage_dir(run_dir, "ingest");
  nlohmann::json manifest;
  manifest["command"] = "ingest";

  std::map<std::string, std::vector<ConversationTree>> filtered_by_ticker;
  std::vector<const std::vector<ConversationTree>*> all_dumps;

  for (const auto& ticker : config.tickers) {
    ParseReport parsed = parse_thread_dump_file(config.dumps.at(ticker), ticker);
    BotFilterReport filtered = filter_bots(std::move(parsed.trees));
    for (const auto& tree : filtered.trees) validate_tree(tree);

    long nodes = 0, comments = 0;
    for (const auto& tree : filtered.trees) {
      nodes += static_cast<long>(tree.nodes.size());
      comments += tree.comment_count();
    }
    nlohmann::json stats;
    stats["trees"] = filtered.trees.size();
    stats["nodes"] = nodes;
    stats["comments"] = comments;
    stats["rows_total"] = parsed.rows_total;
    stats["rows_dropped"] = parsed.rows_dropped;
    stats["orphans_repaired"] = parsed.orphans_repaired;
    stats["diagnostics"] = parsed.diagnostics.size();
    stats["bot_comments_removed"] = filtered.comments_removed;
    stats["bot_trees_removed"] = filtered.trees_removed;
    manifest["dumps"][ticker] = stats;

    std::ofstream out(fs::path(dir) / ("trees_" + ticker + ".csv"));
    write_trees_csv(out, filtered.trees);
    filtered_by_ticker[ticker] = std::move(filtered.trees);
  }

  std::vector<ConversationTree> background;
  if (!config.background_dump.empty()) {
    ParseReport parsed = parse_thread_dump_file(config.background_dump, "_BG");
    BotFilterReport filtered = filter_bots(std::move(parsed.trees));
    background = std::move(filtered.trees);
    manifest["dumps"]["_background"] = {{"trees", background.size()},
                                        {"bot_comments_removed", filtered.comments_removed}};
  }

  std::map<Date, DayTotals> totals;
  if (!config.activity_csv.empty()) {
    totals = totals_from_csv(config.activity_csv);
    std::vector<std::string> missing;
    for (Date d = config.date_start; d <= config.date_end; d += 1)
      if (!totals.count(d)) missing.push_back(d.to_string());
    if (!missing.empty())
      throw InputError(config.activity_csv + ": no forum totals for " +
                       join(missing, ", "));
    manifest["totals_source"] = "activity_csv";
  } else {
    for (const auto& [ticker, trees] : filtered_by_ticker) all_dumps.push_back(&trees);
    if (!background.empty()) all_dumps.push_back(&background);
    totals = totals_from_dumps(all_dumps);
    manifest["totals_source"] = "union_of_dumps";
  }

  std::ofstream activity_out(fs::path(dir) / "activity.csv");
  activity_out << "day,ticker,ticker_submissions,ticker_users,total_submissions,total_users\n";
  for (const auto& ticker : config.tickers) {
    auto by_day = group_by_day(std::move(filtered_by_ticker[ticker]));
    ActivityAggregate aggregate =
        aggregate_daily_activity(ticker, by_day, totals, config.date_start, config.date_end,
                                 config.alert.user_scope);
    long comment_total = 0;
    for (const auto& [day, count] : aggregate.ticker_comments) comment_total += count;
    manifest["activity"][ticker] = {{"days", aggregate.activities.size()},
                                    {"comments", comment_total}};
    for (const auto& a : aggregate.activities)
      activity_out << a.day.to_string() << ',' << a.ticker << ',' << a.ticker_submissions << ','
                   << a.ticker_users << ',' << a.total_submissions << ',' << a.total_users << '\n';
  }
  activity_out.close();

  auto [index_dates, index_returns] = load_index_csv_file(config.index_csv);
  for (const auto& ticker : config.tickers) {
    MarketSeries series = load_market_csv_file(config.markets.at(ticker), ticker);
    attach_index_returns(series, index_dates, index_returns);
    std::ofstream out(fs::path(dir) / ("market_" + ticker + ".csv"));
    out << "date,open,close,volume,index_return\n";
    for (std::size_t i = 0; i < series.dates.size(); ++i) {
      Eigen::Index j = static_cast<Eigen::Index>(i);
      out << series.dates[i].to_string() << ',' << fmt_double(series.open[j]) << ','
          << fmt_double(series.close[j]) << ',' << fmt_double(series.volume[j]) << ',';
      if (!std::isnan(series.market_return[j])) out << fmt_double(series.market_return[j]);
      out << '\n';
    }
    manifest["market"][ticker] = {{"days", series.dates.size()}};
  }

  if (!config.exog_csv.empty()) {
    ExogenousSeries exog = load_exogenous_csv_file(config.exog_csv);
    std::ofstream out(fs::path(dir) / "exog.csv");
    out << "date,outage_reports,subscriber_rank,subscribers,avg_user_rank\n";
    for (std::size_t i = 0; i < exog.dates.size(); ++i) {
      Eigen::Index j = static_cast<Eigen::Index>(i);
      out << exog.dates[i].to_string() << ',' << fmt_double(exog.outage_reports[j]) << ','
          << fmt_double(exog.subscriber_rank[j]) << ',' << fmt_double(exog.subscribers[j]) << ','
          << fmt_double(exog.avg_user_rank[j]) << '\n';
    }
    manifest["exog_days"] = exog.dates.size();
  }
  write_manifest(dir, manifest);
}

void cmd_alert(const PipelineConfig& config, const std::string& run_dir) {
  std::string dir = stage_dir(run_dir, "alert");
  fs::create_directories(fs::path(dir) / "graphs");
  nlohmann::json manifest;
  manifest["command"] = "alert";

  std::ofstream report(fs::path(dir) / "alerts.csv");
  write_alert_report_header(report);
  std::ofstream audit(fs::path(dir) / "alert_audit.csv");
  write_alert_audit_header(audit);

  for (const auto& ticker : config.tickers) {
    auto trees_by_day = load_normalized_trees(run_dir, ticker);
    auto activities = load_activity(run_dir, ticker);
    if (activities.empty())
      throw InputError("no activity rows for ticker " + ticker + "; re-run ingest");
    if (static_cast<int>(activities.size()) <= config.alert.window_I)
      manifest["warnings"].push_back(ticker + ": series shorter than the warm-up window; " +
                                     "stage 1 can never fire");

    AlertRun run = run_alert_pipeline(activities, trees_by_day, config.alert);
    write_alert_report_rows(report, run);
    write_alert_audit_rows(audit, run);

    std::vector<const UserGraph*> graphs;
    for (const auto& [day, graph] : run.day_graphs) graphs.push_back(&graph);
    std::ofstream edges(fs::path(dir) / "graphs" / ("edges_" + ticker + ".csv"));
    write_edge_list_csv(edges, graphs);
    std::ofstream summary(fs::path(dir) / "graphs" / ("summary_" + ticker + ".csv"));
    write_graph_summary_csv(summary, graphs);

    long stage1_days = 0, stage2_days = 0;
    std::vector<std::string> stage2_dates;
    for (const auto& s : run.states) {
      stage1_days += s.stage1_on ? 1 : 0;
      if (s.stage2_on) {
        ++stage2_days;
        stage2_dates.push_back(s.day.to_string());
      }
    }
    manifest["tickers"][ticker] = {{"days", run.states.size()},
                                   {"stage1_days", stage1_days},
                                   {"stage2_days", stage2_days},
                                   {"stage2_dates", stage2_dates}};
  }
  write_manifest(dir, manifest);
}

std::vector<AlertRow> read_alert_report(const std::string& path) {
  CsvTable table = read_csv_file(path);
  int c_day = table.column("day"), c_ticker = table.column("ticker"),
      c_s1 = table.column("stage1"), c_s2 = table.column("stage2"),
      c_inf = table.column("influencers");
  std::vector<AlertRow> rows;
  for (const auto& row : table.rows) {
    AlertRow r;
    r.day = Date::parse(row[c_day]);
    r.ticker = row[c_ticker];
    r.stage1_on = row[c_s1] == "1";
    r.stage2_on = row[c_s2] == "1";
    if (!row[c_inf].empty())
      for (const auto& user : split(row[c_inf], ';')) r.influencers.push_back(user);
    rows.push_back(std::move(r));
  }
  return rows;
}

void cmd_eventstudy(const PipelineConfig& config, const std::string& run_dir) {
  std::string dir = stage_dir(run_dir, "eventstudy");
  nlohmann::json manifest;
  manifest["command"] = "eventstudy";

  fs::path alerts_path = fs::path(run_dir) / "alert" / "alerts.csv";
  if (!fs::exists(alerts_path))
    throw InputError("missing '" + alerts_path.string() + "'; run the alert stage first");
  auto alert_rows = read_alert_report(alerts_path.string());

  for (const auto& ticker : config.tickers) {
    MarketSeries market = load_normalized_market(run_dir, ticker);
    TradingCalendar calendar{market.dates};

    std::vector<AlertState> alerts;
    for (const auto& row : alert_rows) {
      if (row.ticker != ticker) continue;
      AlertState s;
      s.day = row.day;
      s.ticker = ticker;
      s.stage1_on = row.stage1_on;
      s.stage2_on = row.stage2_on;
      s.flagged_influencers = row.influencers;
      alerts.push_back(std::move(s));
    }
    EventSelection selection = select_events(alerts, calendar, config.event_study);

    std::ofstream events_out(fs::path(dir) / ("events_" + ticker + ".csv"));
    events_out << "alert_date,event_date,status,detail\n";
    std::vector<EventStudyResult> results;
    for (const auto& event : selection.events) {
      try {
        results.push_back(run_event_study(market, event, config.event_study));
      } catch (const std::exception& e) {
        events_out << event.alert_date.to_string() << ',' << event.event_date.to_string()
                   << ",skipped," << csv_escape(e.what()) << '\n';
      }
    }
    int best = -1;
    double best_peak = -1e300;
    for (std::size_t i = 0; i < results.size(); ++i) {
      double peak = results[i].car_peak_after();
      if (peak > best_peak) {
        best_peak = peak;
        best = static_cast<int>(i);
      }
    }
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      std::string tag = r.event.event_date.to_string();
      std::ofstream table(fs::path(dir) / ("event_" + ticker + "_" + tag + ".csv"));
      write_event_study_csv(table, r);
      std::ofstream chart(fs::path(dir) / ("chart_event_" + ticker + "_" + tag + ".svg"));
      write_event_study_chart(chart, r);
      events_out << r.event.alert_date.to_string() << ',' << tag << ','
                 << (static_cast<int>(i) == best ? "retained_best" : "retained") << ','
                 << "peak_car_after=" << fmt_double(r.car_peak_after()) << '\n';
    }
    for (const auto& dropped : selection.dropped)
      events_out << dropped.alert_date.to_string() << ",,dropped," << csv_escape(dropped.reason)
                 << '\n';

    manifest["tickers"][ticker] = {{"events_retained", results.size()},
                                   {"events_dropped", selection.dropped.size()}};
    if (best >= 0)
      manifest["tickers"][ticker]["best_event"] = results[best].event.event_date.to_string();
  }
  write_manifest(dir, manifest);
}

void cmd_regress(const PipelineConfig& config, const std::string& run_dir) {
  std::string dir = stage_dir(run_dir, "regress");
  nlohmann::json manifest;
  manifest["command"] = "regress";

  fs::path exog_path = fs::path(run_dir) / "ingest" / "exog.csv";
  if (!fs::exists(exog_path))
    throw InputError("missing '" + exog_path.string() +
                     "'; the regression stage needs the exogenous series");
  ExogenousSeries exog = load_exogenous_csv_file(exog_path.string());

  for (const auto& ticker : config.tickers) {
    MarketSeries market = load_normalized_market(run_dir, ticker);
    auto trees_by_day = load_normalized_trees(run_dir, ticker);
    std::map<Date, double> abn_by_day;
    for (const auto& [day, trees] : trees_by_day)
      abn_by_day[day] = average_branching_number(trees);

    SeriesStore store = build_regression_store(market, exog, abn_by_day,
                                               config.ar_rolling_window, config.ar_full_sample_fit);
    std::vector<RegressionSpec> specs = standing_regression_specs();
    for (const auto& path : config.regression_spec_files)
      specs.push_back(parse_regression_spec_file(path));
    for (const RegressionSpec& base_spec : specs) {
      RegressionSpec spec = base_spec;
      if (config.hac_lags) spec.hac_lags = config.hac_lags;
      nlohmann::json entry;
      entry["group"] = config.is_meme(ticker) ? "meme" : "control";
      try {
        RegressionResult result = run_regression(store, spec);
        std::ofstream out(fs::path(dir) / ("reg_" + spec.name + "_" + ticker + ".csv"));
        write_regression_csv(out, result);
        entry["n"] = result.n;
        entry["adj_r2"] = result.adj_r2;
        entry["hac_lags"] = result.hac_lags_used;
        entry["warnings"] = result.warnings;
      } catch (const std::exception& e) {
        // One failing specification must not take down the others.
        entry["error"] = e.what();
      }
      manifest["results"][ticker][spec.name] = entry;
    }
  }
  write_manifest(dir, manifest);
}

void cmd_report(const PipelineConfig& config, const std::string& run_dir) {
  std::string dir = stage_dir(run_dir, "report");
  nlohmann::json manifest;
  manifest["command"] = "report";

  fs::path alerts_path = fs::path(run_dir) / "alert" / "alerts.csv";
  std::vector<AlertRow> alert_rows;
  if (fs::exists(alerts_path)) alert_rows = read_alert_report(alerts_path.string());

  std::ofstream summary(fs::path(dir) / "summary.csv");
  summary << "ticker,trading_days,stage1_days,stage2_days,events_retained\n";
  for (const auto& ticker : config.tickers) {
    MarketSeries market = load_normalized_market(run_dir, ticker);
    long stage1 = 0, stage2 = 0;
    std::vector<Date> stage2_days;
    for (const auto& row : alert_rows) {
      if (row.ticker != ticker) continue;
      stage1 += row.stage1_on ? 1 : 0;
      if (row.stage2_on) {
        ++stage2;
        stage2_days.push_back(row.day);
      }
    }
    std::ofstream chart(fs::path(dir) / ("chart_" + ticker + ".svg"));
    write_price_alert_chart(chart, market, stage2_days);

    long events = 0;
    fs::path events_path = fs::path(run_dir) / "eventstudy" / ("events_" + ticker + ".csv");
    if (fs::exists(events_path)) {
      CsvTable table = read_csv_file(events_path.string());
      int c_status = table.column("status");
      for (const auto& row : table.rows)
        if (starts_with(row[c_status], "retained")) ++events;
    }
    summary << ticker << ',' << market.dates.size() << ',' << stage1 << ',' << stage2 << ','
            << events << '\n';
    manifest["tickers"][ticker] = {{"stage1_days", stage1}, {"stage2_days", stage2}};
  }
  write_manifest(dir, manifest);
}

FixtureTruth cmd_fixture(const FixtureScenario& scenario, std::uint64_t seed,
                         const std::string& out_dir) {
  return generate_fixture(scenario, seed, out_dir);
}

}  // namespace tickerwatch
