#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tickerwatch/dates.hpp"
#include "tickerwatch/graph.hpp"
#include "tickerwatch/ingest.hpp"

namespace tickerwatch {

inline constexpr int kIndicatorCount = 6;

/// Daily posting volume for one ticker against the whole-forum totals.
struct DailyActivity {
  Date day{};
  std::string ticker;
  long ticker_submissions = 0;
  long ticker_users = 0;
  long total_submissions = 0;
  long total_users = 0;
};

/// The six screening variables with their thresholds and on/off flags for
/// one (day, ticker):
///   V1 relative submissions, V2 absolute submissions, V3 submission change,
///   V4 relative users,       V5 absolute users,       V6 user change.
struct IndicatorSnapshot {
  Date day{};
  std::string ticker;
  std::array<double, kIndicatorCount> values{};
  std::array<std::optional<double>, kIndicatorCount> thresholds{};
  std::array<bool, kIndicatorCount> flags{};
  int active_count = 0;
};

enum class Stage2Reason {
  fired,
  stage1_off,
  empty_day_graph,
  empty_window,
  no_intersection,
};

std::string_view to_string(Stage2Reason reason);

struct AlertState {
  Date day{};
  std::string ticker;
  bool stage1_on = false;
  bool stage2_on = false;
  std::vector<std::string> flagged_influencers;  // non-empty <=> stage2_on
  std::optional<Date> entered_on;                // start of the current episode
  Stage2Reason stage2_reason = Stage2Reason::stage1_off;
  int active_count = 0;
};

struct AlertConfig {
  int window_I = 10;      // trailing days for the rolling thresholds
  int min_flags = 4;      // activation: at least this many indicators on
  double off_mean = 3.0;  // deactivation: mean active flags over 3 prior days
  int pagerank_window = 20;
  int k_indegree = 10;
  int k_influencers = 20;
  int min_cascade = 10;
  PageRankOptions pagerank{};
  bool mad_absolute = true;   // false reproduces the degenerate signed deviation
  bool strict_median = true;  // submission filter: score strictly above median
  enum class UserScope { both, submitters, commenters };
  UserScope user_scope = UserScope::both;
};

/// The six screening variables. A missing previous day behaves like a zero
/// baseline: any activity is maximal relative growth (+inf), none is 0.
/// Ratios with zero forum totals are 0.
std::array<double, kIndicatorCount> compute_variables(const DailyActivity& activity,
                                                      const DailyActivity* previous);

/// Rolling threshold for one variable: mean plus mean absolute deviation over
/// the trailing window for V1/V2/V4/V5, the constant 1.0 (a 100% jump) for
/// the percentage-change variables V3/V6. Short history -> no threshold.
std::optional<double> rolling_threshold(std::span<const double> history, int variable_index,
                                        const AlertConfig& config);

/// One step of the volume-anomaly state machine. Off -> on when at least
/// min_flags indicators fire; on -> off only once the mean active count over
/// the three previous days drops to off_mean (needs 3 days of history).
bool stage1_step(const IndicatorSnapshot& today, std::span<const IndicatorSnapshot> previous,
                 bool prior_on, const AlertConfig& config);

struct Stage2Result {
  bool on = false;
  std::vector<std::string> influencers;
  Stage2Reason reason = Stage2Reason::no_intersection;
};

/// Influencer confirmation: intersects the day's top in-degree users with the
/// PageRank influencer set over the trailing window of filtered graphs.
Stage2Result stage2_step(const UserGraph& day_graph,
                         const std::vector<const UserGraph*>& window_graphs,
                         const AlertConfig& config);

/// Whole-forum daily totals (all dumps combined).
struct DayTotals {
  long submissions = 0;
  long users = 0;
};

/// Aggregates per-day ticker activity over [start, end]; days without trees
/// count as zero. Sentinel-authored messages each count as a distinct user.
struct ActivityAggregate {
  std::vector<DailyActivity> activities;
  std::map<Date, long> ticker_comments;  // audit / cross-checks
};

ActivityAggregate aggregate_daily_activity(const std::string& ticker,
                                           const std::map<Date, std::vector<ConversationTree>>& trees_by_day,
                                           const std::map<Date, DayTotals>& totals, Date start,
                                           Date end, AlertConfig::UserScope scope);

/// Runs both stages chronologically for one ticker. The activity series must
/// be gap-free; graphs are built from the given trees day by day.
struct AlertRun {
  std::vector<AlertState> states;
  std::vector<IndicatorSnapshot> snapshots;  // audit trail, parallel to states
  std::map<Date, UserGraph> day_graphs;      // unfiltered, for export
  std::map<Date, UserGraph> filtered_graphs;
};

AlertRun run_alert_pipeline(const std::vector<DailyActivity>& activities,
                            const std::map<Date, std::vector<ConversationTree>>& trees_by_day,
                            const AlertConfig& config);

/// Report rows: day,ticker,stage1,stage2,active_count,f1..f6,influencers.
void write_alert_report_header(std::ostream& out);
void write_alert_report_rows(std::ostream& out, const AlertRun& run);

/// Audit rows: every variable, threshold and flag per day.
void write_alert_audit_header(std::ostream& out);
void write_alert_audit_rows(std::ostream& out, const AlertRun& run);

}  // namespace tickerwatch
