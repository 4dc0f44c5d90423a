#include "tickerwatch/fixture.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "tickerwatch/common.hpp"
#include "tickerwatch/config.hpp"
#include "tickerwatch/rng.hpp"

namespace fs = std::filesystem;

namespace tickerwatch {
namespace {

struct ThreadPlan {
  std::string author;
  long score = 0;
  int comments = 0;
  bool with_bot = false;  // one extra auto-moderator comment
};

std::string timestamp(Date day, int minute_slot) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "T%02d:%02d:00Z", 9 + minute_slot / 60, minute_slot % 60);
  return day.to_string() + buf;
}

/// Deterministic permutation of "<prefix>0..<prefix>n-1".
std::vector<std::string> shuffled_pool(const std::string& prefix, int n, Rng& rng) {
  std::vector<int> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(ids[i], ids[rng.bounded(i + 1)]);
  std::vector<std::string> users;
  users.reserve(n);
  char buf[32];
  for (int id : ids) {
    std::snprintf(buf, sizeof(buf), "%s%04d", prefix.c_str(), id);
    users.push_back(buf);
  }
  return users;
}

void emit_thread(std::ostream& out, Date day, int minute_slot, const ThreadPlan& plan,
                 const std::vector<std::string>& slots, std::size_t& next_slot,
                 const std::string& flair, long& comments_written) {
  nlohmann::json base;
  base["title"] = plan.author + " thread " + std::to_string(minute_slot);
  base["author_name"] = plan.author;
  base["score_submission"] = plan.score;
  base["upvote_ratio"] = 0.9;
  base["time_submission"] = timestamp(day, minute_slot);
  base["num_comment"] = plan.comments + (plan.with_bot ? 1 : 0);
  base["flair"] = flair;

  if (plan.comments == 0 && !plan.with_bot) {
    nlohmann::json row = base;
    row["body"] = "";
    row["name"] = "";
    row["parent_id"] = "";
    row["depth"] = 0;
    row["score"] = 0;
    row["time_comment"] = "";
    row["distinguished"] = "";
    out << row.dump() << '\n';
    return;
  }

  std::string prev_name;
  for (int j = 0; j < plan.comments; ++j) {
    const std::string& commenter = slots[next_slot++];
    nlohmann::json row = base;
    row["body"] = "comment " + std::to_string(j);
    row["name"] = "t1_" + commenter;
    // Alternate between direct replies and one-deeper nesting so the
    // reduction has higher-order comments to reroute.
    bool nested = (j % 2 == 1) && !prev_name.empty();
    row["parent_id"] = nested ? prev_name : "t3_root";
    row["depth"] = nested ? 2 : 1;
    row["score"] = 1 + j % 5;
    row["time_comment"] = timestamp(day, minute_slot + j + 1);
    row["distinguished"] = "";
    out << row.dump() << '\n';
    ++comments_written;
    prev_name = "t1_" + commenter;
  }
  if (plan.with_bot) {
    nlohmann::json row = base;
    row["body"] = "automated reminder";
    row["name"] = "t1_AutoModerator";
    row["parent_id"] = "t3_root";
    row["depth"] = 1;
    row["score"] = 1;
    row["time_comment"] = timestamp(day, minute_slot + plan.comments + 1);
    row["distinguished"] = "moderator";
    out << row.dump() << '\n';
  }
}

}  // namespace

FixtureScenario parse_scenario_file(const std::string& path) {
  auto kv = read_kv_file(path);
  FixtureScenario s;
  auto get_int = [&](const char* key, int fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : static_cast<int>(parse_long(it->second, key));
  };
  if (kv.count("ticker")) s.ticker = kv.at("ticker");
  if (kv.count("control_ticker")) s.control_ticker = kv.at("control_ticker");
  if (kv.count("start")) s.start = Date::parse(kv.at("start"));
  s.n_days = get_int("n_days", s.n_days);
  if (kv.count("burst_offsets")) {
    s.burst_offsets.clear();
    for (const auto& part : split(kv.at("burst_offsets"), ','))
      if (!trim(part).empty())
        s.burst_offsets.push_back(static_cast<int>(parse_long(trim(part), "burst_offsets")));
  }
  if (kv.count("influencer")) s.influencer = kv.at("influencer");
  s.influencer_quiet_comments = get_int("influencer_quiet_comments", s.influencer_quiet_comments);
  s.influencer_burst_comments = get_int("influencer_burst_comments", s.influencer_burst_comments);
  s.burst_other_subs = get_int("burst_other_subs", s.burst_other_subs);
  if (kv.count("base_price")) s.base_price = parse_double(kv.at("base_price"), "base_price");
  if (kv.count("burst_drift")) s.burst_drift = parse_double(kv.at("burst_drift"), "burst_drift");
  s.drift_days = get_int("drift_days", s.drift_days);
  if (kv.count("base_volume")) s.base_volume = parse_double(kv.at("base_volume"), "base_volume");
  return s;
}

FixtureTruth generate_fixture(const FixtureScenario& scenario, std::uint64_t seed,
                              const std::string& out_dir) {
  const int warmup = 10;
  std::vector<Date> trading_days;
  for (int i = 0; i < scenario.n_days; ++i) {
    Date d = scenario.start + i;
    if (!d.is_weekend()) trading_days.push_back(d);
  }
  std::set<int> burst_set(scenario.burst_offsets.begin(), scenario.burst_offsets.end());
  std::vector<int> burst_trading_index;
  for (int offset : scenario.burst_offsets) {
    if (offset <= warmup)
      throw AnalysisError("burst on day " + std::to_string(offset) +
                          " falls inside the " + std::to_string(warmup) + "-day warm-up");
    if (offset >= scenario.n_days)
      throw AnalysisError("burst on day " + std::to_string(offset) + " is outside the range");
    Date day = scenario.start + offset;
    if (day.is_weekend())
      throw AnalysisError("burst on " + day.to_string() + " is a non-trading day");
    auto it = std::lower_bound(trading_days.begin(), trading_days.end(), day);
    int tau = static_cast<int>(it - trading_days.begin());
    if (tau < 21 || tau + 10 > static_cast<int>(trading_days.size()) - 1)
      throw AnalysisError("burst on " + day.to_string() +
                          " leaves no room for the estimation and event windows");
    burst_trading_index.push_back(tau);
  }

  fs::create_directories(out_dir);
  Rng rng(seed);
  FixtureTruth truth;
  truth.ticker = scenario.ticker;
  truth.control_ticker = scenario.control_ticker;
  truth.influencer = scenario.influencer;
  truth.seed = seed;
  for (int offset : burst_set) truth.burst_dates.push_back(scenario.start + offset);
  truth.expected_stage2_alerts = static_cast<int>(burst_set.size());
  const bool with_control = !scenario.control_ticker.empty();
  const int n_tickers = with_control ? 2 : 1;

  // Greedy spacing over trading days mirrors the event-selection contract.
  std::sort(burst_trading_index.begin(), burst_trading_index.end());
  int last_accepted = -1000;
  for (int tau : burst_trading_index) {
    if (tau - last_accepted >= 10) {
      ++truth.expected_events;
      last_accepted = tau;
    }
  }

  const std::string dump_path = (fs::path(out_dir) / ("dump_" + scenario.ticker + ".jsonl")).string();
  const std::string control_path =
      (fs::path(out_dir) / ("dump_" + scenario.control_ticker + ".jsonl")).string();
  const std::string bg_path = (fs::path(out_dir) / "dump_background.jsonl").string();
  std::ofstream dump(dump_path), bg(bg_path);
  std::ofstream control;
  if (with_control) control.open(control_path);
  if (!dump || !bg || (with_control && !control))
    throw InputError("cannot write fixture dumps under '" + out_dir + "'");

  const std::vector<std::string> kFlairs = {"Discussion", "DD", "YOLO", "Gain"};
  auto emit_ticker_day = [&](std::ofstream& out, Date day, std::vector<ThreadPlan>& threads,
                             const std::string& pool_prefix, bool lead_from_pool) {
    long slots_needed = lead_from_pool ? 1 : 0;
    for (std::size_t t = 1; t < threads.size(); ++t) ++slots_needed;  // submitters
    for (const auto& t : threads) slots_needed += t.comments;
    std::vector<std::string> slots = shuffled_pool(pool_prefix, 700, rng);
    if (slots_needed > static_cast<long>(slots.size()))
      throw AnalysisError("scenario needs more distinct forum users than a pool holds");
    std::size_t next_slot = 0;
    if (lead_from_pool) threads[0].author = slots[next_slot++];
    for (std::size_t t = 1; t < threads.size(); ++t) threads[t].author = slots[next_slot++];
    long comments_written = 0;
    for (std::size_t t = 0; t < threads.size(); ++t)
      emit_thread(out, day, static_cast<int>(t) * 3, threads[t], slots, next_slot,
                  kFlairs[t % kFlairs.size()], comments_written);
    return comments_written;
  };
  auto quiet_bystanders = [&](std::vector<ThreadPlan>& threads, int i, int count) {
    for (int j = 0; j < count; ++j) {
      ThreadPlan plan;
      plan.comments = 3 + (i * 7 + j) % 7;
      plan.score = 4 + j % 7;
      threads.push_back(plan);
    }
  };

  for (int i = 0; i < scenario.n_days; ++i) {
    Date day = scenario.start + i;
    bool burst = burst_set.count(i) != 0;
    bool odd = i % 2 == 1;
    int quiet_others = odd ? scenario.quiet_other_subs_odd : scenario.quiet_other_subs_even;

    // Watched ticker. The influencer's daily thread passes the score and
    // cascade filters; quiet bystander threads never reach ten comments.
    std::vector<ThreadPlan> threads;
    ThreadPlan lead;
    lead.author = scenario.influencer;
    lead.score = burst ? 500 : 50;
    lead.comments = burst ? scenario.influencer_burst_comments : scenario.influencer_quiet_comments;
    lead.with_bot = true;
    threads.push_back(lead);
    if (burst) {
      for (int j = 0; j < scenario.burst_other_subs; ++j) {
        ThreadPlan plan;
        // Burst cascade sizes vary with the day so day-level aggregates are
        // not collinear across planted episodes.
        plan.comments = j < 30 ? 12 + i % 3 : 5;
        plan.score = j < 30 ? 14 + j : 5 + (j - 30) % 5;
        threads.push_back(plan);
      }
    } else {
      quiet_bystanders(threads, i, quiet_others);
    }
    long comments_written = emit_ticker_day(dump, day, threads, "u", false);
    if (burst) {
      FixtureBurstGraph g;
      g.day = day;
      g.nodes = static_cast<long>(threads.size()) + comments_written;  // all users distinct
      g.edges = comments_written;                                      // one edge per comment
      truth.burst_graphs.push_back(g);
    }

    // Control ticker: the same quiet composition every day, no persistent
    // poster, its own user pool.
    if (with_control) {
      std::vector<ThreadPlan> control_threads;
      ThreadPlan control_lead;
      control_lead.score = 50;
      control_lead.comments = scenario.influencer_quiet_comments;
      control_lead.with_bot = true;
      control_threads.push_back(control_lead);
      quiet_bystanders(control_threads, i, quiet_others);
      emit_ticker_day(control, day, control_threads, "c", true);
    }

    // Background threads pin the quiet-day forum totals to exact powers of
    // two over each ticker's share (1/16 for both the submission and the
    // user ratio), whatever the ticker count.
    long quiet_subs = odd ? 12 : 8;
    long quiet_users = odd ? 84 : 62;
    long bg_subs = quiet_subs * 16 - quiet_subs * n_tickers;
    long bg_users = quiet_users * 16 - quiet_users * n_tickers;
    long bg_comments = bg_users - bg_subs;
    long base = bg_comments / bg_subs;
    long remainder = bg_comments - base * bg_subs;
    std::vector<std::string> bg_slots = shuffled_pool("b", 1400, rng);
    std::size_t bg_next = 0;
    for (long j = 0; j < bg_subs; ++j) {
      ThreadPlan plan;
      plan.author = bg_slots[bg_next++];
      plan.score = 3 + j % 5;
      plan.comments = static_cast<int>(j < remainder ? base + 1 : base);
      long ignored = 0;
      emit_thread(bg, day, static_cast<int>(j), plan, bg_slots, bg_next, "Discussion", ignored);
    }
    if (bg_next != static_cast<std::size_t>(bg_users))
      throw AnalysisError("background user budget mismatch (internal scenario bug)");
  }
  dump.close();
  bg.close();
  if (with_control) control.close();

  // Market data: quiet returns are exactly twice the index moves, planted
  // drift runs for drift_days trading days from each burst.
  std::set<int> drift_days_set;
  for (int tau : burst_trading_index)
    for (int d = 0; d < scenario.drift_days; ++d) drift_days_set.insert(tau + d);

  const std::string market_path =
      (fs::path(out_dir) / ("market_" + scenario.ticker + ".csv")).string();
  const std::string control_market_path =
      (fs::path(out_dir) / ("market_" + scenario.control_ticker + ".csv")).string();
  const std::string index_path = (fs::path(out_dir) / "index.csv").string();
  std::ofstream market(market_path), index(index_path);
  std::ofstream control_market;
  if (with_control) control_market.open(control_market_path);
  market << "date,open,close,volume\n";
  if (with_control) control_market << "date,open,close,volume\n";
  index << "date,return\n";
  double close = scenario.base_price;
  double control_close = scenario.base_price * 4.0;
  const double burst_volume_profile[10] = {8, 12, 10, 6, 5, 4, 3, 2.5, 2, 1.5};
  for (std::size_t i = 0; i < trading_days.size(); ++i) {
    double mkt_ret = i == 0 ? 0.0 : (i % 2 ? 0.001 : -0.001);
    double stock_ret = 2.0 * mkt_ret;
    if (drift_days_set.count(static_cast<int>(i))) stock_ret += scenario.burst_drift;
    double prev_close = close;
    if (i > 0) close = prev_close * (1.0 + stock_ret);
    double open = i == 0 ? close * 0.995 : prev_close * (1.0 + 0.5 * stock_ret);
    double volume = scenario.base_volume * (1.0 + 0.04 * (static_cast<int>(i % 5) - 2));
    for (int tau : burst_trading_index) {
      int d = static_cast<int>(i) - tau;
      if (d >= 0 && d < 10) volume *= burst_volume_profile[d];
    }
    market << trading_days[i].to_string() << ',' << fmt_double(open) << ',' << fmt_double(close)
           << ',' << fmt_double(volume) << '\n';
    index << trading_days[i].to_string() << ',' << fmt_double(mkt_ret) << '\n';
    if (with_control) {
      double prev = control_close;
      if (i > 0) control_close = prev * (1.0 + mkt_ret);  // tracks the index
      double control_open = i == 0 ? control_close * 0.995 : prev * (1.0 + 0.5 * mkt_ret);
      double control_volume =
          scenario.base_volume * 5.0 * (1.0 + 0.03 * (static_cast<int>(i % 7) - 3));
      control_market << trading_days[i].to_string() << ',' << fmt_double(control_open) << ','
                     << fmt_double(control_close) << ',' << fmt_double(control_volume) << '\n';
    }
  }
  market.close();
  index.close();
  if (with_control) control_market.close();

  const std::string exog_path = (fs::path(out_dir) / "exog.csv").string();
  std::ofstream exog(exog_path);
  exog << "date,outage_reports,subscriber_rank,subscribers,avg_user_rank\n";
  for (int i = 0; i < scenario.n_days; ++i) {
    Date day = scenario.start + i;
    long reports = burst_set.count(i) ? 20 + i % 7 : (burst_set.count(i - 1) ? 5 + i % 3 : 0);
    long rank = std::max(1, 20 - i / 30);
    long subscribers = 1000000 + 2000L * i + (burst_set.count(i) ? 50000 : 0);
    long avg_rank = 40 + i % 9;
    exog << day.to_string() << ',' << reports << ',' << rank << ',' << subscribers << ','
         << avg_rank << '\n';
  }
  exog.close();

  const std::string config_path = (fs::path(out_dir) / "config.cfg").string();
  std::ofstream config(config_path);
  config << "# generated pipeline configuration for the synthetic fixture\n"
         << "tickers = " << scenario.ticker
         << (with_control ? "," + scenario.control_ticker : "") << "\n"
         << "meme_tickers = " << scenario.ticker << "\n"
         << "date_start = " << scenario.start.to_string() << "\n"
         << "date_end = " << (scenario.start + (scenario.n_days - 1)).to_string() << "\n"
         << "dump." << scenario.ticker << " = " << fs::absolute(dump_path).string() << "\n";
  if (with_control)
    config << "dump." << scenario.control_ticker << " = " << fs::absolute(control_path).string()
           << "\n";
  config << "background_dump = " << fs::absolute(bg_path).string() << "\n"
         << "market." << scenario.ticker << " = " << fs::absolute(market_path).string() << "\n";
  if (with_control)
    config << "market." << scenario.control_ticker << " = "
           << fs::absolute(control_market_path).string() << "\n";
  config << "index_csv = " << fs::absolute(index_path).string() << "\n"
         << "exog_csv = " << fs::absolute(exog_path).string() << "\n";
  config.close();
  truth.config_path = config_path;

  nlohmann::json j;
  j["ticker"] = truth.ticker;
  if (with_control) j["control_ticker"] = truth.control_ticker;
  j["influencer"] = truth.influencer;
  j["seed"] = truth.seed;
  std::vector<std::string> burst_strings;
  for (Date d : truth.burst_dates) burst_strings.push_back(d.to_string());
  j["burst_dates"] = burst_strings;
  j["expected_stage2_alerts"] = truth.expected_stage2_alerts;
  j["expected_events"] = truth.expected_events;
  nlohmann::json graphs = nlohmann::json::array();
  for (const auto& g : truth.burst_graphs)
    graphs.push_back({{"day", g.day.to_string()}, {"nodes", g.nodes}, {"edges", g.edges}});
  j["burst_graphs"] = graphs;
  std::ofstream truth_out(fs::path(out_dir) / "truth.json");
  truth_out << j.dump(2) << '\n';
  return truth;
}

}  // namespace tickerwatch
