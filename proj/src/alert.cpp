#include "tickerwatch/alert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "tickerwatch/common.hpp"
#include "tickerwatch/csv.hpp"

namespace tickerwatch {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double percent_change(long previous, long current) {
  if (previous == 0) return current > 0 ? kInf : 0.0;
  return (static_cast<double>(current) - static_cast<double>(previous)) /
         static_cast<double>(previous);
}

double ratio(long part, long whole) {
  return whole > 0 ? static_cast<double>(part) / static_cast<double>(whole) : 0.0;
}

}  // namespace

std::string_view to_string(Stage2Reason reason) {
  switch (reason) {
    case Stage2Reason::fired: return "fired";
    case Stage2Reason::stage1_off: return "stage1_off";
    case Stage2Reason::empty_day_graph: return "empty_day_graph";
    case Stage2Reason::empty_window: return "empty_window";
    case Stage2Reason::no_intersection: return "no_intersection";
  }
  return "unknown";
}

std::array<double, kIndicatorCount> compute_variables(const DailyActivity& activity,
                                                      const DailyActivity* previous) {
  std::array<double, kIndicatorCount> v{};
  v[0] = ratio(activity.ticker_submissions, activity.total_submissions);
  v[1] = static_cast<double>(activity.ticker_submissions);
  v[2] = percent_change(previous ? previous->ticker_submissions : 0, activity.ticker_submissions);
  v[3] = ratio(activity.ticker_users, activity.total_users);
  v[4] = static_cast<double>(activity.ticker_users);
  v[5] = percent_change(previous ? previous->ticker_users : 0, activity.ticker_users);
  return v;
}

std::optional<double> rolling_threshold(std::span<const double> history, int variable_index,
                                        const AlertConfig& config) {
  if (variable_index == 2 || variable_index == 5) return 1.0;  // a 100% jump
  if (static_cast<int>(history.size()) < config.window_I) return std::nullopt;

  double mean = 0.0;
  for (double x : history) mean += x;
  mean /= static_cast<double>(history.size());
  double mad = 0.0;
  for (double x : history) mad += config.mad_absolute ? std::abs(x - mean) : (x - mean);
  mad /= static_cast<double>(history.size());
  return mean + mad;
}

bool stage1_step(const IndicatorSnapshot& today, std::span<const IndicatorSnapshot> previous,
                 bool prior_on, const AlertConfig& config) {
  if (!prior_on) return today.active_count >= config.min_flags;
  if (previous.size() < 3) return true;  // not enough history to de-escalate
  double mean = 0.0;
  for (std::size_t i = previous.size() - 3; i < previous.size(); ++i)
    mean += previous[i].active_count;
  mean /= 3.0;
  return mean > config.off_mean;
}

Stage2Result stage2_step(const UserGraph& day_graph,
                         const std::vector<const UserGraph*>& window_graphs,
                         const AlertConfig& config) {
  Stage2Result result;
  if (day_graph.empty()) {
    result.reason = Stage2Reason::empty_day_graph;
    return result;
  }
  InfluencerSet influencers =
      windowed_pagerank(day_graph.day, window_graphs, config.k_influencers, config.pagerank);
  if (influencers.empty()) {
    result.reason = Stage2Reason::empty_window;
    return result;
  }
  for (const auto& user : top_k_by_indegree(day_graph, config.k_indegree))
    if (influencers.contains(user)) result.influencers.push_back(user);
  result.on = !result.influencers.empty();
  result.reason = result.on ? Stage2Reason::fired : Stage2Reason::no_intersection;
  return result;
}

ActivityAggregate aggregate_daily_activity(
    const std::string& ticker, const std::map<Date, std::vector<ConversationTree>>& trees_by_day,
    const std::map<Date, DayTotals>& totals, Date start, Date end,
    AlertConfig::UserScope scope) {
  ActivityAggregate aggregate;
  for (Date day = start; day <= end; day += 1) {
    DailyActivity activity;
    activity.day = day;
    activity.ticker = ticker;
    auto it = trees_by_day.find(day);
    if (it != trees_by_day.end()) {
      std::set<std::string> users;
      long anonymous = 0, comments = 0;
      for (const auto& tree : it->second) {
        ++activity.ticker_submissions;
        comments += tree.comment_count();
        auto note_user = [&](const std::string& author) {
          if (is_sentinel_author(author))
            ++anonymous;  // distinct singleton; cannot be deduplicated
          else
            users.insert(author);
        };
        if (scope != AlertConfig::UserScope::commenters) note_user(tree.nodes[0].author);
        if (scope != AlertConfig::UserScope::submitters)
          for (std::size_t i = 1; i < tree.nodes.size(); ++i) note_user(tree.nodes[i].author);
      }
      activity.ticker_users = static_cast<long>(users.size()) + anonymous;
      aggregate.ticker_comments[day] = comments;
    } else {
      aggregate.ticker_comments[day] = 0;
    }
    auto tot = totals.find(day);
    if (tot != totals.end()) {
      activity.total_submissions = tot->second.submissions;
      activity.total_users = tot->second.users;
    }
    activity.total_submissions = std::max(activity.total_submissions, activity.ticker_submissions);
    activity.total_users = std::max(activity.total_users, activity.ticker_users);
    aggregate.activities.push_back(std::move(activity));
  }
  return aggregate;
}

AlertRun run_alert_pipeline(const std::vector<DailyActivity>& activities,
                            const std::map<Date, std::vector<ConversationTree>>& trees_by_day,
                            const AlertConfig& config) {
  if (activities.empty()) throw AnalysisError("alert pipeline needs a non-empty activity series");
  std::vector<std::string> gaps;
  for (std::size_t i = 1; i < activities.size(); ++i)
    for (Date d = activities[i - 1].day + 1; d < activities[i].day; d += 1)
      gaps.push_back(d.to_string());
  if (!gaps.empty())
    throw InputError("activity series has date gaps: " + join(gaps, ", "));

  AlertRun run;
  static const std::vector<ConversationTree> kNoTrees;
  auto trees_on = [&](Date day) -> const std::vector<ConversationTree>& {
    auto it = trees_by_day.find(day);
    return it == trees_by_day.end() ? kNoTrees : it->second;
  };
  for (const auto& activity : activities) {
    run.day_graphs[activity.day] = reduce_trees(trees_on(activity.day));
    run.filtered_graphs[activity.day] =
        filtered_reduce(trees_on(activity.day), config.min_cascade, config.strict_median);
  }

  std::array<std::vector<double>, kIndicatorCount> history;
  bool on = false;
  std::optional<Date> entered_on;

  for (std::size_t i = 0; i < activities.size(); ++i) {
    const DailyActivity& activity = activities[i];
    const DailyActivity* previous = i > 0 ? &activities[i - 1] : nullptr;

    IndicatorSnapshot snap;
    snap.day = activity.day;
    snap.ticker = activity.ticker;
    snap.values = compute_variables(activity, previous);
    for (int v = 0; v < kIndicatorCount; ++v) {
      std::span<const double> h(history[v]);
      if (static_cast<int>(h.size()) > config.window_I)
        h = h.subspan(h.size() - config.window_I);
      snap.thresholds[v] = rolling_threshold(h, v, config);
      // Change variables additionally need an actual previous day.
      if ((v == 2 || v == 5) && previous == nullptr) snap.thresholds[v].reset();
      snap.flags[v] = snap.thresholds[v] && snap.values[v] > *snap.thresholds[v];
      if (snap.flags[v]) ++snap.active_count;
    }

    bool now_on = stage1_step(snap, std::span<const IndicatorSnapshot>(run.snapshots), on, config);
    if (now_on && !on) entered_on = activity.day;
    if (!now_on) entered_on.reset();
    on = now_on;

    AlertState state;
    state.day = activity.day;
    state.ticker = activity.ticker;
    state.stage1_on = on;
    state.entered_on = entered_on;
    state.active_count = snap.active_count;
    if (on) {
      std::vector<const UserGraph*> window;
      for (int back = config.pagerank_window; back >= 1; --back) {
        auto it = run.filtered_graphs.find(activity.day - back);
        if (it != run.filtered_graphs.end()) window.push_back(&it->second);
      }
      Stage2Result stage2 = stage2_step(run.filtered_graphs.at(activity.day), window, config);
      state.stage2_on = stage2.on;
      state.flagged_influencers = std::move(stage2.influencers);
      state.stage2_reason = stage2.reason;
    } else {
      state.stage2_reason = Stage2Reason::stage1_off;
    }

    run.snapshots.push_back(std::move(snap));
    run.states.push_back(std::move(state));
    const IndicatorSnapshot& today = run.snapshots.back();
    for (int v = 0; v < kIndicatorCount; ++v) history[v].push_back(today.values[v]);
  }
  return run;
}

void write_alert_report_header(std::ostream& out) {
  out << "day,ticker,stage1,stage2,active_count,f1,f2,f3,f4,f5,f6,influencers\n";
}

void write_alert_report_rows(std::ostream& out, const AlertRun& run) {
  for (std::size_t i = 0; i < run.states.size(); ++i) {
    const AlertState& s = run.states[i];
    const IndicatorSnapshot& snap = run.snapshots[i];
    out << s.day.to_string() << ',' << csv_escape(s.ticker) << ',' << (s.stage1_on ? 1 : 0) << ','
        << (s.stage2_on ? 1 : 0) << ',' << s.active_count;
    for (int v = 0; v < kIndicatorCount; ++v) out << ',' << (snap.flags[v] ? 1 : 0);
    out << ',' << csv_escape(join(s.flagged_influencers, ";")) << '\n';
  }
}

void write_alert_audit_header(std::ostream& out) {
  out << "day,ticker";
  for (int v = 1; v <= kIndicatorCount; ++v)
    out << ",v" << v << ",t" << v << ",i" << v;
  out << ",active_count,stage1,stage2,stage2_reason\n";
}

void write_alert_audit_rows(std::ostream& out, const AlertRun& run) {
  for (std::size_t i = 0; i < run.states.size(); ++i) {
    const AlertState& s = run.states[i];
    const IndicatorSnapshot& snap = run.snapshots[i];
    out << s.day.to_string() << ',' << csv_escape(s.ticker);
    for (int v = 0; v < kIndicatorCount; ++v) {
      out << ',' << fmt_double(snap.values[v]) << ','
          << (snap.thresholds[v] ? fmt_double(*snap.thresholds[v]) : std::string()) << ','
          << (snap.flags[v] ? 1 : 0);
    }
    out << ',' << s.active_count << ',' << (s.stage1_on ? 1 : 0) << ',' << (s.stage2_on ? 1 : 0)
        << ',' << to_string(s.stage2_reason) << '\n';
  }
}

}  // namespace tickerwatch
