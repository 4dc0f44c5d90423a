#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tickerwatch/dates.hpp"

namespace tickerwatch {

/// One forum message: the root submission or a comment under it.
struct MessageRecord {
  std::string message_id;
  std::optional<std::string> parent_id;  // none <=> root submission
  std::string author;
  std::string submission_author;
  std::string title;  // root only
  std::string body;
  int depth = 0;
  long score = 0;
  long submission_score = 0;
  std::optional<double> upvote_ratio;  // root only
  std::string created_at;              // ISO-8601 UTC, kept verbatim
  long num_comments = 0;
  std::optional<std::string> flair;
  bool moderator = false;
};

/// A submission plus its comment forest. nodes[0] is always the root;
/// edges run child -> parent by node index and form a tree.
struct ConversationTree {
  std::string tree_id;
  std::string ticker;
  Date day{};  // UTC date of the root submission
  std::vector<MessageRecord> nodes;
  std::vector<std::pair<int, int>> edges;

  int comment_count() const { return static_cast<int>(nodes.size()) - 1; }
};

struct ParseDiagnostic {
  int line = 0;
  std::string message;
};

struct ParseReport {
  std::vector<ConversationTree> trees;
  std::vector<ParseDiagnostic> diagnostics;
  long rows_total = 0;
  long rows_dropped = 0;
  long orphans_repaired = 0;
};

/// Parses a line-delimited thread dump (JSON records or a CSV table with the
/// same field names). Rows of one tree are contiguous; a submission without
/// comments is a single row with empty comment fields. Malformed rows yield
/// per-line diagnostics; comments whose parent is missing are attached to the
/// root and counted as repaired.
ParseReport parse_thread_dump(std::istream& source, const std::string& ticker,
                              const std::string& source_name = "<stream>");
ParseReport parse_thread_dump_file(const std::string& path, const std::string& ticker);

struct BotFilterReport {
  std::vector<ConversationTree> trees;
  long comments_removed = 0;
  long trees_removed = 0;
};

/// Removes every node tagged as an automated moderator. Children of a removed
/// comment are re-parented to its nearest surviving ancestor; a moderator root
/// removes the whole tree.
BotFilterReport filter_bots(std::vector<ConversationTree> trees);

/// Throws InputError when the tree invariants do not hold (unique depth-0
/// root at index 0, |edges| = |nodes|-1, every edge endpoint valid, acyclic).
void validate_tree(const ConversationTree& tree);

/// Normalized columnar persistence for parsed trees.
void write_trees_csv(std::ostream& out, const std::vector<ConversationTree>& trees);
std::vector<ConversationTree> read_trees_csv(std::istream& in, const std::string& source_name);
std::vector<ConversationTree> read_trees_csv_file(const std::string& path);

/// Daily market data for one ticker.
struct MarketSeries {
  std::string ticker;
  std::vector<Date> dates;  // strictly increasing trading days
  Eigen::VectorXd open;
  Eigen::VectorXd close;
  Eigen::VectorXd volume;
  Eigen::VectorXd market_return;  // index proxy aligned with dates; NaN = unknown
  bool has_market_return = false;

  int index_of(Date d) const;  // -1 when absent
};

/// Loads `date,open,close,volume` (optional `index_return` column accepted).
/// Non-positive prices and duplicate or unordered dates are hard errors.
MarketSeries load_market_csv(std::istream& in, const std::string& source_name,
                             const std::string& ticker);
MarketSeries load_market_csv_file(const std::string& path, const std::string& ticker);

/// Loads `date,return` for the market index proxy.
std::pair<std::vector<Date>, Eigen::VectorXd> load_index_csv_file(const std::string& path);

/// Joins index returns onto the series by exact date match; dates missing
/// from the index stay NaN and are reported lazily where consumed.
void attach_index_returns(MarketSeries& series, const std::vector<Date>& dates,
                          const Eigen::VectorXd& returns);

/// Simple daily returns (P_t - P_{t-1}) / P_{t-1} over consecutive trading
/// days; element i-1 belongs to dates[i]. Requires at least 2 observations.
Eigen::VectorXd daily_returns(const MarketSeries& series);

/// Exogenous daily series: platform outage reports, forum popularity rank,
/// subscriber counts and average user rank.
struct ExogenousSeries {
  std::vector<Date> dates;
  Eigen::VectorXd outage_reports;
  Eigen::VectorXd subscriber_rank;
  Eigen::VectorXd subscribers;
  Eigen::VectorXd avg_user_rank;
  Eigen::VectorXd outage_flag;  // 1 when outage_reports != 0

  int index_of(Date d) const;
};

/// Loads `date,outage_reports,subscriber_rank,subscribers,avg_user_rank`.
ExogenousSeries load_exogenous_csv_file(const std::string& path);

}  // namespace tickerwatch
