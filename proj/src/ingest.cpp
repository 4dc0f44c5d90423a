#include "tickerwatch/ingest.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tickerwatch/common.hpp"
#include "tickerwatch/csv.hpp"

namespace tickerwatch {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kDumpFields = {
    "title",         "body",        "name",          "parent_id",    "author_name",
    "depth",         "score",       "score_submission", "upvote_ratio", "time_submission",
    "time_comment",  "num_comment", "flair",         "distinguished"};

/// One dump row reduced to a string map, regardless of the carrier format.
struct RawRow {
  int line = 0;
  std::map<std::string, std::string> fields;

  const std::string& get(const std::string& name) const {
    static const std::string empty;
    auto it = fields.find(name);
    return it == fields.end() ? empty : it->second;
  }
};

std::string json_scalar_to_string(const nlohmann::json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_float()) return fmt_double(v.get<double>());
  return v.dump();
}

bool is_moderator_tag(std::string_view s) { return lower(trim(s)) == "moderator"; }

/// Comment author per the dump convention: the `name` value carries a type
/// prefix such as "t1_"; the remainder is the user id.
std::string author_from_name(const std::string& name) {
  if (name.size() > 3 && name[0] == 't' && name[2] == '_' && name[1] >= '0' && name[1] <= '9')
    return name.substr(3);
  return name;
}

bool row_has_comment(const RawRow& row) {
  return !trim(row.get("name")).empty() || !trim(row.get("time_comment")).empty();
}

void recompute_depths(ConversationTree& tree) {
  std::vector<std::vector<int>> children(tree.nodes.size());
  for (auto [child, parent] : tree.edges) children[parent].push_back(child);
  std::deque<int> queue{0};
  tree.nodes[0].depth = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int c : children[u]) {
      tree.nodes[c].depth = tree.nodes[u].depth + 1;
      queue.push_back(c);
    }
  }
}

/// Builds one tree from a contiguous group of rows sharing a submission.
void flush_group(std::vector<RawRow>& group, const std::string& ticker, ParseReport& report) {
  if (group.empty()) return;
  const RawRow& head = group.front();

  ConversationTree tree;
  tree.ticker = ticker;
  tree.tree_id = head.get("author_name") + "|" + std::string(trim(head.get("time_submission")));
  tree.day = date_of_timestamp(head.get("time_submission"));

  MessageRecord root;
  root.message_id = "t3_" + tree.tree_id;
  root.author = head.get("author_name");
  root.submission_author = root.author;
  root.title = head.get("title");
  root.depth = 0;
  try_parse_long(head.get("score_submission"), root.score);
  root.submission_score = root.score;
  double ratio;
  if (try_parse_double(head.get("upvote_ratio"), ratio)) {
    if (ratio >= 0.0 && ratio <= 1.0) {
      root.upvote_ratio = ratio;
    } else {
      report.diagnostics.push_back(
          {head.line, "upvote_ratio " + fmt_double(ratio) + " outside [0,1]; ignored"});
    }
  }
  root.created_at = std::string(trim(head.get("time_submission")));
  try_parse_long(head.get("num_comment"), root.num_comments);
  if (!trim(head.get("flair")).empty()) root.flair = std::string(trim(head.get("flair")));
  // A lone submission row describes the submission itself, so its moderator
  // tag belongs to the root.
  if (group.size() == 1 && !row_has_comment(head) && is_moderator_tag(head.get("distinguished")))
    root.moderator = true;
  tree.nodes.push_back(std::move(root));

  std::map<std::string, int> latest_by_name;  // comment name -> node index
  for (const RawRow& row : group) {
    if (!row_has_comment(row)) continue;  // submission-only row
    std::string name = std::string(trim(row.get("name")));
    if (name.empty()) {
      report.diagnostics.push_back({row.line, "comment row missing mandatory 'name' id; dropped"});
      ++report.rows_dropped;
      continue;
    }
    MessageRecord msg;
    msg.message_id = name;
    msg.author = author_from_name(name);
    msg.submission_author = tree.nodes[0].author;
    msg.body = row.get("body");
    try_parse_long(row.get("score"), msg.score);
    msg.submission_score = tree.nodes[0].submission_score;
    msg.created_at = std::string(trim(row.get("time_comment")));
    msg.num_comments = tree.nodes[0].num_comments;
    msg.moderator = is_moderator_tag(row.get("distinguished"));
    long d;
    if (try_parse_long(row.get("depth"), d)) msg.depth = static_cast<int>(d);

    std::string parent = std::string(trim(row.get("parent_id")));
    int parent_idx = 0;
    if (parent.empty() || starts_with(parent, "t3_")) {
      parent_idx = 0;
    } else {
      auto it = latest_by_name.find(parent);
      if (it != latest_by_name.end()) {
        parent_idx = it->second;
      } else {
        parent_idx = 0;
        ++report.orphans_repaired;
        report.diagnostics.push_back(
            {row.line, "parent '" + parent + "' not found; comment attached to root"});
      }
    }
    msg.parent_id = tree.nodes[parent_idx].message_id;
    int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(std::move(msg));
    tree.edges.emplace_back(idx, parent_idx);
    latest_by_name[name] = idx;
  }

  recompute_depths(tree);
  report.trees.push_back(std::move(tree));
  group.clear();
}

std::string group_key(const RawRow& row) {
  return std::string(trim(row.get("time_submission"))) + "\x1f" + row.get("author_name") +
         "\x1f" + row.get("title");
}

}  // namespace

ParseReport parse_thread_dump(std::istream& source, const std::string& ticker,
                              const std::string& source_name) {
  ParseReport report;
  std::string line;
  int line_no = 0;
  bool sniffed = false, jsonl = true;
  std::vector<std::string> csv_header;
  std::vector<RawRow> group;
  std::string current_key;

  while (std::getline(source, line)) {
    ++line_no;
    auto trimmed = trim(line);
    if (trimmed.empty()) continue;

    if (!sniffed) {
      jsonl = trimmed.front() == '{';
      sniffed = true;
      if (!jsonl) {
        for (auto& f : csv_split(trimmed)) csv_header.push_back(std::string(trim(f)));
        continue;
      }
    }

    ++report.rows_total;
    RawRow row;
    row.line = line_no;
    if (jsonl) {
      nlohmann::json rec = nlohmann::json::parse(trimmed, nullptr, false);
      if (rec.is_discarded() || !rec.is_object()) {
        report.diagnostics.push_back({line_no, source_name + ": malformed JSON record; dropped"});
        ++report.rows_dropped;
        continue;
      }
      for (const auto& field : kDumpFields) {
        auto it = rec.find(field);
        if (it != rec.end()) row.fields[field] = json_scalar_to_string(*it);
      }
    } else {
      auto cells = csv_split(line);
      for (std::size_t i = 0; i < csv_header.size() && i < cells.size(); ++i)
        row.fields[csv_header[i]] = cells[i];
    }

    if (trim(row.get("author_name")).empty() ||
        !Date::try_parse(trim(row.get("time_submission")).substr(
            0, std::min<std::size_t>(10, trim(row.get("time_submission")).size())))) {
      report.diagnostics.push_back(
          {line_no, "row missing mandatory submission ids (author_name/time_submission); dropped"});
      ++report.rows_dropped;
      continue;
    }

    std::string key = group_key(row);
    if (key != current_key) {
      flush_group(group, ticker, report);
      current_key = key;
    }
    group.push_back(std::move(row));
  }
  flush_group(group, ticker, report);
  return report;
}

ParseReport parse_thread_dump_file(const std::string& path, const std::string& ticker) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open thread dump '" + path + "'");
  return parse_thread_dump(in, ticker, path);
}

BotFilterReport filter_bots(std::vector<ConversationTree> trees) {
  BotFilterReport report;
  for (auto& tree : trees) {
    if (tree.nodes[0].moderator) {
      ++report.trees_removed;
      continue;
    }
    std::vector<int> parent_of(tree.nodes.size(), -1);
    for (auto [child, parent] : tree.edges) parent_of[child] = parent;

    std::vector<int> remap(tree.nodes.size(), -1);
    std::vector<MessageRecord> kept;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      if (tree.nodes[i].moderator) {
        ++report.comments_removed;
        continue;
      }
      remap[i] = static_cast<int>(kept.size());
      kept.push_back(tree.nodes[i]);
    }
    if (kept.size() == tree.nodes.size()) {
      report.trees.push_back(std::move(tree));
      continue;
    }

    ConversationTree filtered;
    filtered.tree_id = tree.tree_id;
    filtered.ticker = tree.ticker;
    filtered.day = tree.day;
    filtered.nodes = std::move(kept);
    for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
      if (remap[i] < 0) continue;
      int anc = parent_of[i];
      while (anc > 0 && remap[anc] < 0) anc = parent_of[anc];
      int parent_new = anc <= 0 ? 0 : remap[anc];
      filtered.edges.emplace_back(remap[i], parent_new);
      filtered.nodes[remap[i]].parent_id = filtered.nodes[parent_new].message_id;
    }
    recompute_depths(filtered);
    report.trees.push_back(std::move(filtered));
  }
  return report;
}

void validate_tree(const ConversationTree& tree) {
  if (tree.nodes.empty()) throw InputError("tree '" + tree.tree_id + "': no nodes");
  if (tree.nodes[0].depth != 0 || tree.nodes[0].parent_id)
    throw InputError("tree '" + tree.tree_id + "': node 0 is not a root");
  for (std::size_t i = 1; i < tree.nodes.size(); ++i)
    if (tree.nodes[i].depth == 0)
      throw InputError("tree '" + tree.tree_id + "': multiple depth-0 nodes");
  if (tree.edges.size() + 1 != tree.nodes.size())
    throw InputError("tree '" + tree.tree_id + "': edge count != node count - 1");
  std::set<int> children_seen;
  for (auto [child, parent] : tree.edges) {
    if (child <= 0 || child >= static_cast<int>(tree.nodes.size()) || parent < 0 ||
        parent >= static_cast<int>(tree.nodes.size()))
      throw InputError("tree '" + tree.tree_id + "': edge endpoint out of range");
    if (!children_seen.insert(child).second)
      throw InputError("tree '" + tree.tree_id + "': node has two parents");
  }
  std::vector<int> parent_of(tree.nodes.size(), -1);
  for (auto [child, parent] : tree.edges) parent_of[child] = parent;
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
    int steps = 0, cur = static_cast<int>(i);
    while (cur != 0 && steps <= static_cast<int>(tree.nodes.size())) {
      cur = parent_of[cur];
      ++steps;
      if (cur < 0) throw InputError("tree '" + tree.tree_id + "': disconnected node");
    }
    if (cur != 0) throw InputError("tree '" + tree.tree_id + "': cycle detected");
  }
}

void write_trees_csv(std::ostream& out, const std::vector<ConversationTree>& trees) {
  out << "tree_id,ticker,day,ord,parent_ord,message_id,author,submission_author,depth,score,"
         "submission_score,num_comments,moderator\n";
  for (const auto& tree : trees) {
    std::vector<int> parent_of(tree.nodes.size(), -1);
    for (auto [child, parent] : tree.edges) parent_of[child] = parent;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& n = tree.nodes[i];
      out << csv_escape(tree.tree_id) << ',' << csv_escape(tree.ticker) << ','
          << tree.day.to_string() << ',' << i << ',' << parent_of[i] << ','
          << csv_escape(n.message_id) << ',' << csv_escape(n.author) << ','
          << csv_escape(n.submission_author) << ',' << n.depth << ',' << n.score << ','
          << n.submission_score << ',' << n.num_comments << ',' << (n.moderator ? 1 : 0) << '\n';
    }
  }
}

std::vector<ConversationTree> read_trees_csv(std::istream& in, const std::string& source_name) {
  CsvTable table = read_csv(in, source_name);
  int c_tree = table.column("tree_id"), c_ticker = table.column("ticker"),
      c_day = table.column("day"), c_ord = table.column("ord"),
      c_parent = table.column("parent_ord"), c_mid = table.column("message_id"),
      c_author = table.column("author"), c_subauthor = table.column("submission_author"),
      c_depth = table.column("depth"), c_score = table.column("score"),
      c_subscore = table.column("submission_score"), c_ncom = table.column("num_comments"),
      c_mod = table.column("moderator");

  std::vector<ConversationTree> trees;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string& tid = row[c_tree];
    if (trees.empty() || trees.back().tree_id != tid) {
      ConversationTree t;
      t.tree_id = tid;
      t.ticker = row[c_ticker];
      t.day = Date::parse(row[c_day]);
      trees.push_back(std::move(t));
    }
    auto& tree = trees.back();
    MessageRecord n;
    n.message_id = row[c_mid];
    n.author = row[c_author];
    n.submission_author = row[c_subauthor];
    n.depth = static_cast<int>(parse_long(row[c_depth], "depth"));
    n.score = parse_long(row[c_score], "score");
    n.submission_score = parse_long(row[c_subscore], "submission_score");
    n.num_comments = parse_long(row[c_ncom], "num_comments");
    n.moderator = parse_long(row[c_mod], "moderator") != 0;
    int ord = static_cast<int>(parse_long(row[c_ord], "ord"));
    int parent = static_cast<int>(parse_long(row[c_parent], "parent_ord"));
    if (ord != static_cast<int>(tree.nodes.size()))
      throw InputError(source_name + ": non-sequential node ordinal in tree '" + tid + "'");
    if (parent >= ord)
      throw InputError(source_name + ": parent ordinal " + std::to_string(parent) +
                       " does not precede node " + std::to_string(ord) + " in tree '" + tid + "'");
    if (parent >= 0) {
      n.parent_id = tree.nodes[parent].message_id;
      tree.edges.emplace_back(ord, parent);
    }
    tree.nodes.push_back(std::move(n));
  }
  for (const auto& t : trees) validate_tree(t);
  return trees;
}

std::vector<ConversationTree> read_trees_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_trees_csv(in, path);
}

int MarketSeries::index_of(Date d) const {
  auto it = std::lower_bound(dates.begin(), dates.end(), d);
  if (it == dates.end() || *it != d) return -1;
  return static_cast<int>(it - dates.begin());
}

MarketSeries load_market_csv(std::istream& in, const std::string& source_name,
                             const std::string& ticker) {
  CsvTable table = read_csv(in, source_name);
  int c_date = table.column("date"), c_open = table.column("open"),
      c_close = table.column("close"), c_volume = table.column("volume");
  int c_index = table.column("index_return", false);

  MarketSeries series;
  series.ticker = ticker;
  std::size_t n = table.rows.size();
  series.open.resize(n);
  series.close.resize(n);
  series.volume.resize(n);
  series.market_return = Eigen::VectorXd::Constant(n, kNaN);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    int line = table.line_numbers[i];
    Date d = Date::parse(row[c_date]);
    if (!series.dates.empty()) {
      if (d == series.dates.back())
        throw InputError(source_name + ": duplicate date " + d.to_string());
      if (d < series.dates.back())
        throw InputError(source_name + ": dates out of order at " + d.to_string());
    }
    series.dates.push_back(d);
    double open = parse_double(row[c_open], source_name + " open");
    double close = parse_double(row[c_close], source_name + " close");
    double volume = parse_double(row[c_volume], source_name + " volume");
    if (open <= 0.0 || close <= 0.0)
      throw InputError(source_name + ": non-positive price on " + d.to_string() + " (line " +
                       std::to_string(line) + ")");
    if (volume < 0.0)
      throw InputError(source_name + ": negative volume on " + d.to_string());
    series.open[i] = open;
    series.close[i] = close;
    series.volume[i] = volume;
    if (c_index >= 0 && !trim(row[c_index]).empty()) {
      series.market_return[i] = parse_double(row[c_index], source_name + " index_return");
      series.has_market_return = true;
    }
  }
  return series;
}

MarketSeries load_market_csv_file(const std::string& path, const std::string& ticker) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open market CSV '" + path + "'");
  return load_market_csv(in, path, ticker);
}

std::pair<std::vector<Date>, Eigen::VectorXd> load_index_csv_file(const std::string& path) {
  CsvTable table = read_csv_file(path);
  int c_date = table.column("date"), c_ret = table.column("return");
  std::vector<Date> dates;
  Eigen::VectorXd returns(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    Date d = Date::parse(table.rows[i][c_date]);
    if (!dates.empty() && d <= dates.back())
      throw InputError(path + ": dates out of order at " + d.to_string());
    dates.push_back(d);
    returns[static_cast<Eigen::Index>(i)] = parse_double(table.rows[i][c_ret], path + " return");
  }
  return {std::move(dates), std::move(returns)};
}

void attach_index_returns(MarketSeries& series, const std::vector<Date>& dates,
                          const Eigen::VectorXd& returns) {
  std::map<Date, double> by_date;
  for (std::size_t i = 0; i < dates.size(); ++i) by_date[dates[i]] = returns[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < series.dates.size(); ++i) {
    auto it = by_date.find(series.dates[i]);
    if (it != by_date.end()) series.market_return[static_cast<Eigen::Index>(i)] = it->second;
  }
  series.has_market_return = true;
}

Eigen::VectorXd daily_returns(const MarketSeries& series) {
  Eigen::Index n = series.close.size();
  if (n < 2) throw InputError("daily returns need at least 2 observations, got " +
                              std::to_string(n));
  return (series.close.tail(n - 1).array() - series.close.head(n - 1).array()) /
         series.close.head(n - 1).array();
}

int ExogenousSeries::index_of(Date d) const {
  auto it = std::lower_bound(dates.begin(), dates.end(), d);
  if (it == dates.end() || *it != d) return -1;
  return static_cast<int>(it - dates.begin());
}

ExogenousSeries load_exogenous_csv_file(const std::string& path) {
  CsvTable table = read_csv_file(path);
  int c_date = table.column("date"), c_rep = table.column("outage_reports"),
      c_rank = table.column("subscriber_rank"), c_sub = table.column("subscribers"),
      c_avg = table.column("avg_user_rank");
  ExogenousSeries exog;
  std::size_t n = table.rows.size();
  exog.outage_reports.resize(n);
  exog.subscriber_rank.resize(n);
  exog.subscribers.resize(n);
  exog.avg_user_rank.resize(n);
  exog.outage_flag.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    Date d = Date::parse(row[c_date]);
    if (!exog.dates.empty() && d <= exog.dates.back())
      throw InputError(path + ": dates out of order at " + d.to_string());
    exog.dates.push_back(d);
    Eigen::Index j = static_cast<Eigen::Index>(i);
    exog.outage_reports[j] = parse_double(row[c_rep], path + " outage_reports");
    exog.subscriber_rank[j] = parse_double(row[c_rank], path + " subscriber_rank");
    exog.subscribers[j] = parse_double(row[c_sub], path + " subscribers");
    exog.avg_user_rank[j] = parse_double(row[c_avg], path + " avg_user_rank");
    if (exog.outage_reports[j] < 0 || exog.subscribers[j] < 0)
      throw InputError(path + ": negative count on " + d.to_string());
    if (exog.subscriber_rank[j] < 1 || exog.avg_user_rank[j] < 1)
      throw InputError(path + ": rank below 1 on " + d.to_string());
    exog.outage_flag[j] = exog.outage_reports[j] != 0.0 ? 1.0 : 0.0;
  }
  return exog;
}

}  // namespace tickerwatch
