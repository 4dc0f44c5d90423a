#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "tickerwatch/common.hpp"
#include "tickerwatch/alert.hpp"
#include "tickerwatch/rng.hpp"

using namespace tickerwatch;

namespace {

DailyActivity make_activity(Date day, long t_subs, long t_users, long a_subs, long a_users) {
  DailyActivity a;
  a.day = day;
  a.ticker = "GME";
  a.ticker_submissions = t_subs;
  a.ticker_users = t_users;
  a.total_submissions = a_subs;
  a.total_users = a_users;
  return a;
}

/// Two-pass oracle: mean first, then mean absolute deviation.
double threshold_oracle(const std::vector<double>& history) {
  double mean = 0.0;
  for (double x : history) mean += x;
  mean /= history.size();
  double mad = 0.0;
  for (double x : history) mad += std::abs(x - mean);
  mad /= history.size();
  return mean + mad;
}

IndicatorSnapshot snapshot_with_count(Date day, int active) {
  IndicatorSnapshot snap;
  snap.day = day;
  snap.ticker = "GME";
  snap.active_count = active;
  return snap;
}

ConversationTree thread_with_comments(const std::string& id, Date day,
                                      const std::string& submitter, long score,
                                      const std::vector<std::string>& commenters) {
  ConversationTree tree;
  tree.tree_id = id;
  tree.ticker = "GME";
  tree.day = day;
  MessageRecord root;
  root.message_id = id + "_root";
  root.author = submitter;
  root.submission_author = submitter;
  root.score = score;
  root.submission_score = score;
  tree.nodes.push_back(root);
  for (std::size_t i = 0; i < commenters.size(); ++i) {
    MessageRecord node;
    node.message_id = id + "_c" + std::to_string(i);
    node.author = commenters[i];
    node.submission_author = submitter;
    node.parent_id = root.message_id;
    node.depth = 1;
    tree.nodes.push_back(std::move(node));
    tree.edges.emplace_back(static_cast<int>(i) + 1, 0);
  }
  return tree;
}

}  // namespace

TEST_CASE("the six screening variables") {
  Date day = Date::from_ymd(2021, 1, 14);
  SUBCASE("50 ticker submissions of 200 total give a 0.25 share") {
    auto a = make_activity(day, 50, 80, 200, 400);
    auto v = compute_variables(a, nullptr);
    CHECK(v[0] == doctest::Approx(0.25));
    CHECK(v[1] == 50.0);
    CHECK(v[3] == doctest::Approx(0.2));
    CHECK(v[4] == 80.0);
  }
  SUBCASE("a jump from 10 to 25 submissions is a 150% change") {
    auto prev = make_activity(day - 1, 10, 10, 100, 100);
    auto curr = make_activity(day, 25, 10, 100, 100);
    auto v = compute_variables(curr, &prev);
    CHECK(v[2] == doctest::Approx(1.5));
  }
  SUBCASE("growth from zero forces the change flag on, zero-to-zero stays off") {
    auto prev = make_activity(day - 1, 0, 0, 100, 100);
    auto curr = make_activity(day, 7, 3, 100, 100);
    auto v = compute_variables(curr, &prev);
    CHECK(std::isinf(v[2]));
    CHECK(v[2] > 1.0);  // beats the constant threshold by definition
    auto flat = compute_variables(make_activity(day, 0, 0, 100, 100), &prev);
    CHECK(flat[2] == 0.0);
  }
  SUBCASE("zero forum totals give zero ratios") {
    auto a = make_activity(day, 0, 0, 0, 0);
    auto v = compute_variables(a, nullptr);
    CHECK(v[0] == 0.0);
    CHECK(v[3] == 0.0);
  }
}

TEST_CASE("rolling threshold is mean plus mean absolute deviation") {
  AlertConfig config;
  SUBCASE("ten constant fives give exactly five") {
    std::vector<double> history(10, 5.0);
    auto t = rolling_threshold(history, 0, config);
    REQUIRE(t.has_value());
    CHECK(*t == doctest::Approx(5.0).epsilon(1e-15));
  }
  SUBCASE("nine twos and a twelve: mean 3, deviation 1.8, threshold 4.8") {
    std::vector<double> history(9, 2.0);
    history.push_back(12.0);
    auto t = rolling_threshold(history, 1, config);
    REQUIRE(t.has_value());
    CHECK(*t == doctest::Approx(4.8).epsilon(1e-12));
  }
  SUBCASE("percentage-change variables use the constant 1.0") {
    std::vector<double> history(10, 42.0);
    CHECK(*rolling_threshold(history, 2, config) == 1.0);
    CHECK(*rolling_threshold(history, 5, config) == 1.0);
    CHECK(*rolling_threshold({}, 2, config) == 1.0);
  }
  SUBCASE("short history yields no threshold") {
    std::vector<double> history(9, 5.0);
    CHECK_FALSE(rolling_threshold(history, 0, config).has_value());
  }
  SUBCASE("signed deviations cancel, reproducing the degenerate reading") {
    AlertConfig literal;
    literal.mad_absolute = false;
    std::vector<double> history(9, 2.0);
    history.push_back(12.0);
    CHECK(*rolling_threshold(history, 0, literal) == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("thresholds match a two-pass oracle on random histories") {
  Rng rng(404);
  AlertConfig config;
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<double> history;
    for (int i = 0; i < 10; ++i) history.push_back(rng.uniform(0.0, 1000.0));
    auto t = rolling_threshold(history, rep % 2 == 0 ? 0 : 4, config);
    REQUIRE(t.has_value());
    CHECK(std::abs(*t - threshold_oracle(history)) <= 1e-12);
  }
}

TEST_CASE("activation needs at least four active indicators") {
  AlertConfig config;
  auto today = snapshot_with_count(Date::from_ymd(2021, 1, 14), 4);
  CHECK(stage1_step(today, {}, false, config));
  today.active_count = 3;
  CHECK_FALSE(stage1_step(today, {}, false, config));
}

TEST_CASE("deactivation follows the trailing three-day mean rule") {
  AlertConfig config;
  Date day = Date::from_ymd(2021, 2, 1);
  auto today = snapshot_with_count(day, 0);
  SUBCASE("mean (4,3,2)/3 = 3 turns the alert off") {
    std::vector<IndicatorSnapshot> prev{snapshot_with_count(day - 3, 4),
                                        snapshot_with_count(day - 2, 3),
                                        snapshot_with_count(day - 1, 2)};
    CHECK_FALSE(stage1_step(today, prev, true, config));
  }
  SUBCASE("mean (6,5,1)/3 = 4 keeps it on") {
    std::vector<IndicatorSnapshot> prev{snapshot_with_count(day - 3, 6),
                                        snapshot_with_count(day - 2, 5),
                                        snapshot_with_count(day - 1, 1)};
    CHECK(stage1_step(today, prev, true, config));
  }
  SUBCASE("fewer than three days of history keeps it on") {
    std::vector<IndicatorSnapshot> prev{snapshot_with_count(day - 1, 0)};
    CHECK(stage1_step(today, prev, true, config));
  }
}

TEST_CASE("the state machine runs the documented episode shape end to end") {
  // 60 days: quiet alternation, one 3-day burst, then quiet again.
  AlertConfig config;
  Date start = Date::from_ymd(2021, 1, 1);
  std::vector<DailyActivity> activities;
  for (int i = 0; i < 60; ++i) {
    bool burst = i >= 30 && i < 33;
    long subs = burst ? 60 : (i % 2 ? 12 : 8);
    long users = burst ? 600 : (i % 2 ? 84 : 62);
    activities.push_back(make_activity(start + i, subs, users, subs + (i % 2 ? 180 : 120),
                                       users + (i % 2 ? 1260 : 930)));
  }
  AlertRun run = run_alert_pipeline(activities, {}, config);
  REQUIRE(run.states.size() == 60);
  for (int i = 0; i < 30; ++i) CHECK_FALSE(run.states[i].stage1_on);
  // Day 30 trips the screen with all six flags. On day 31 the trailing mean
  // over days 27..29 is 2, so the literal release rule lets go even though
  // the burst continues; day 32's own four flags re-arm it.
  CHECK(run.states[30].stage1_on);
  CHECK(run.states[30].entered_on == start + 30);
  CHECK_FALSE(run.states[31].stage1_on);
  CHECK(run.states[31].active_count == 4);
  CHECK(run.states[32].stage1_on);
  CHECK(run.states[32].entered_on == start + 32);
  CHECK(run.states[33].stage1_on);               // mean(6,4,4) > 3 keeps it on
  CHECK_FALSE(run.states[34].stage1_on);         // mean(4,4,0) <= 3 releases it
  for (int i = 35; i < 60; ++i) CHECK_FALSE(run.states[i].stage1_on);
  // Stage 2 cannot fire without any conversation trees.
  for (const auto& s : run.states)
    if (s.stage1_on) CHECK(s.stage2_reason == Stage2Reason::empty_day_graph);
}

TEST_CASE("hysteresis: the alert never turns off the day it turned on") {
  AlertConfig config;
  Date start = Date::from_ymd(2021, 1, 1);
  std::vector<DailyActivity> activities;
  for (int i = 0; i < 15; ++i) {
    long subs = i == 12 ? 90 : (i % 2 ? 12 : 8);
    long users = i == 12 ? 900 : (i % 2 ? 84 : 62);
    activities.push_back(make_activity(start + i, subs, users, subs + 150, users + 1000));
  }
  AlertRun run = run_alert_pipeline(activities, {}, config);
  CHECK(run.states[12].stage1_on);
}

TEST_CASE("date gaps in the activity series are rejected with the missing days") {
  AlertConfig config;
  Date start = Date::from_ymd(2021, 1, 1);
  std::vector<DailyActivity> activities{make_activity(start, 1, 1, 10, 10),
                                        make_activity(start + 3, 1, 1, 10, 10)};
  CHECK_THROWS_WITH_AS(run_alert_pipeline(activities, {}, config),
                       doctest::Contains("2021-01-02"), InputError);
}

TEST_CASE("monotonicity: more ticker submissions never clear active flags") {
  Rng rng(606);
  AlertConfig config;
  Date start = Date::from_ymd(2021, 3, 1);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<DailyActivity> base;
    for (int i = 0; i < 14; ++i) {
      long subs = rng.range(5, 30);
      long users = rng.range(10, 60);
      base.push_back(make_activity(start + i, subs, users, subs + rng.range(50, 200),
                                   users + rng.range(100, 500)));
    }
    auto bumped = base;
    bumped.back().ticker_submissions += rng.range(1, 50);
    bumped.back().total_submissions += 0;  // same forum totals
    bumped.back().total_submissions =
        std::max(bumped.back().total_submissions, bumped.back().ticker_submissions);

    AlertRun a = run_alert_pipeline(base, {}, config);
    AlertRun b = run_alert_pipeline(bumped, {}, config);
    CHECK(b.snapshots.back().active_count >= a.snapshots.back().active_count);
  }
}

TEST_CASE("flags are scale-equivariant when history and value scale together") {
  Rng rng(707);
  AlertConfig config;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> history;
    for (int i = 0; i < 10; ++i) history.push_back(rng.uniform(1.0, 500.0));
    double value = rng.uniform(1.0, 900.0);
    double c = rng.uniform(0.01, 100.0);
    auto t = rolling_threshold(history, 1, config);
    std::vector<double> scaled = history;
    for (double& x : scaled) x *= c;
    auto t_scaled = rolling_threshold(scaled, 1, config);
    REQUIRE(t.has_value());
    REQUIRE(t_scaled.has_value());
    bool fired = value > *t;
    bool fired_scaled = value * c > *t_scaled;
    if (std::abs(value * c - *t_scaled) > 1e-9 * std::abs(*t_scaled))
      CHECK(fired == fired_scaled);
  }
}

TEST_CASE("stage 2 intersects day hubs with the window influencer set") {
  AlertConfig config;
  config.k_indegree = 2;
  config.k_influencers = 3;
  Date day = Date::from_ymd(2021, 2, 1);

  std::vector<std::string> fans;
  for (int i = 0; i < 12; ++i) fans.push_back("fan" + std::to_string(i));
  std::vector<ConversationTree> day_trees{
      thread_with_comments("big", day, "leader", 100, fans),
      thread_with_comments("small", day, "other", 1, {"x1", "x2"})};
  UserGraph day_graph = filtered_reduce(day_trees, config.min_cascade, config.strict_median);

  std::vector<UserGraph> window;
  for (int back = 1; back <= 5; ++back) {
    std::vector<std::string> commenters;
    for (int i = 0; i < 11; ++i) commenters.push_back("fan" + std::to_string((back + i) % 12));
    // A low-score filler keeps the day's median below the leader's score.
    window.push_back(filtered_reduce(
        {thread_with_comments("w" + std::to_string(back), day - back, "leader", 100, commenters),
         thread_with_comments("f" + std::to_string(back), day - back, "lurker", 1, {"q"})},
        config.min_cascade, config.strict_median));
  }
  std::vector<const UserGraph*> ptrs;
  for (const auto& g : window) ptrs.push_back(&g);

  Stage2Result hit = stage2_step(day_graph, ptrs, config);
  CHECK(hit.on);
  CHECK(hit.reason == Stage2Reason::fired);
  REQUIRE(hit.influencers.size() >= 1);
  CHECK(hit.influencers[0] == "leader");

  SUBCASE("an absent day hub gives an empty intersection") {
    std::vector<ConversationTree> other{
        thread_with_comments("b2", day, "newcomer", 100, fans),
        thread_with_comments("b3", day, "lurker", 1, {"q"})};
    UserGraph other_graph = filtered_reduce(other, config.min_cascade, config.strict_median);
    config.k_influencers = 1;  // only "leader" survives the window cut
    Stage2Result miss = stage2_step(other_graph, ptrs, config);
    CHECK_FALSE(miss.on);
    CHECK(miss.reason == Stage2Reason::no_intersection);
  }
  SUBCASE("an empty filtered day graph reports its reason") {
    Stage2Result miss = stage2_step(UserGraph{}, ptrs, config);
    CHECK_FALSE(miss.on);
    CHECK(miss.reason == Stage2Reason::empty_day_graph);
  }
  SUBCASE("an empty window reports its reason") {
    Stage2Result miss = stage2_step(day_graph, {}, config);
    CHECK_FALSE(miss.on);
    CHECK(miss.reason == Stage2Reason::empty_window);
  }
}

TEST_CASE("stage 2 never fires on a day stage 1 is off") {
  AlertConfig config;
  Date start = Date::from_ymd(2021, 1, 1);
  std::vector<DailyActivity> activities;
  std::map<Date, std::vector<ConversationTree>> trees;
  for (int i = 0; i < 25; ++i) {
    activities.push_back(make_activity(start + i, 5, 15, 100, 300));
    std::vector<std::string> fans;
    for (int f = 0; f < 12; ++f) fans.push_back("fan" + std::to_string((i + f) % 20));
    trees[start + i] = {thread_with_comments("t" + std::to_string(i), start + i, "leader", 50, fans),
                        thread_with_comments("s" + std::to_string(i), start + i, "bob", 1, {"z"})};
  }
  AlertRun run = run_alert_pipeline(activities, trees, config);
  for (const auto& s : run.states) {
    CHECK_FALSE(s.stage1_on);  // constant activity never trips the screen
    CHECK_FALSE(s.stage2_on);
    CHECK(s.stage2_reason == Stage2Reason::stage1_off);
  }
}

TEST_CASE("identical inputs produce byte-identical reports") {
  AlertConfig config;
  Date start = Date::from_ymd(2021, 1, 1);
  std::vector<DailyActivity> activities;
  std::map<Date, std::vector<ConversationTree>> trees;
  Rng rng(81);
  for (int i = 0; i < 30; ++i) {
    long subs = rng.range(3, 40);
    activities.push_back(
        make_activity(start + i, subs, subs * 3, subs + 100, subs * 3 + 400));
    std::vector<std::string> fans;
    for (int f = 0; f < static_cast<int>(rng.range(0, 14)); ++f)
      fans.push_back("fan" + std::to_string(rng.bounded(30)));
    trees[start + i] = {
        thread_with_comments("t" + std::to_string(i), start + i, "leader", 50, fans)};
  }
  auto render = [&]() {
    AlertRun run = run_alert_pipeline(activities, trees, config);
    std::ostringstream report, audit;
    write_alert_report_header(report);
    write_alert_report_rows(report, run);
    write_alert_audit_header(audit);
    write_alert_audit_rows(audit, run);
    return report.str() + audit.str();
  };
  CHECK(render() == render());
}

TEST_CASE("aggregation counts sentinel authors as distinct singletons") {
  Date day = Date::from_ymd(2021, 1, 4);
  std::map<Date, std::vector<ConversationTree>> trees;
  trees[day] = {thread_with_comments("t", day, "alice", 5, {"bob", "[deleted]", "[deleted]"})};
  auto aggregate = aggregate_daily_activity("GME", trees, {}, day, day,
                                            AlertConfig::UserScope::both);
  // alice + bob + two unattributable commenters
  CHECK(aggregate.activities[0].ticker_users == 4);

  auto submitters_only = aggregate_daily_activity("GME", trees, {}, day, day,
                                                  AlertConfig::UserScope::submitters);
  CHECK(submitters_only.activities[0].ticker_users == 1);
}
