#include "tickerwatch/graph.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "tickerwatch/common.hpp"
#include "tickerwatch/csv.hpp"

namespace tickerwatch {
namespace {

UserGraph build_graph(const std::vector<const ConversationTree*>& trees) {
  UserGraph graph;
  if (trees.empty()) return graph;
  graph.day = trees.front()->day;
  graph.ticker = trees.front()->ticker;

  std::set<std::string> users;
  std::set<std::pair<std::string, std::string>> edges;
  for (const ConversationTree* tree : trees) {
    const std::string& submitter = tree->nodes[0].author;
    bool submitter_ok = !is_sentinel_author(submitter);
    if (submitter_ok) users.insert(submitter);
    for (std::size_t i = 1; i < tree->nodes.size(); ++i) {
      const std::string& commenter = tree->nodes[i].author;
      if (is_sentinel_author(commenter)) continue;
      users.insert(commenter);
      if (submitter_ok && commenter != submitter) edges.insert({commenter, submitter});
    }
  }

  graph.users.assign(users.begin(), users.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < graph.users.size(); ++i)
    index[graph.users[i]] = static_cast<int>(i);
  for (const auto& [src, dst] : edges) graph.edges.emplace_back(index[src], index[dst]);
  std::sort(graph.edges.begin(), graph.edges.end());
  return graph;
}

}  // namespace

int UserGraph::index_of(const std::string& user) const {
  auto it = std::lower_bound(users.begin(), users.end(), user);
  if (it == users.end() || *it != user) return -1;
  return static_cast<int>(it - users.begin());
}

Eigen::VectorXi UserGraph::in_degrees() const {
  Eigen::VectorXi deg = Eigen::VectorXi::Zero(static_cast<Eigen::Index>(users.size()));
  for (auto [src, dst] : edges) ++deg[dst];
  return deg;
}

UserGraph reduce_trees(const std::vector<ConversationTree>& trees) {
  std::vector<const ConversationTree*> ptrs;
  ptrs.reserve(trees.size());
  for (const auto& t : trees) ptrs.push_back(&t);
  return build_graph(ptrs);
}

UserGraph filtered_reduce(const std::vector<ConversationTree>& trees, int min_cascade,
                          bool strict_median) {
  if (trees.empty()) return UserGraph{};

  std::vector<double> scores;
  scores.reserve(trees.size());
  for (const auto& t : trees) scores.push_back(static_cast<double>(t.nodes[0].score));
  std::sort(scores.begin(), scores.end());
  std::size_t n = scores.size();
  double median = (n % 2 == 1) ? scores[n / 2] : 0.5 * (scores[n / 2 - 1] + scores[n / 2]);

  std::vector<const ConversationTree*> kept;
  for (const auto& t : trees) {
    double s = static_cast<double>(t.nodes[0].score);
    bool above = strict_median ? s > median : s >= median;
    if (above && t.comment_count() >= min_cascade) kept.push_back(&t);
  }
  UserGraph graph = build_graph(kept);
  if (kept.empty()) {
    graph.day = trees.front().day;
    graph.ticker = trees.front().ticker;
  }
  return graph;
}

std::map<std::string, double> in_degree_centrality(const UserGraph& graph) {
  if (graph.empty()) throw AnalysisError("in-degree centrality undefined on an empty graph");
  Eigen::VectorXi deg = graph.in_degrees();
  double n = static_cast<double>(graph.users.size());
  std::map<std::string, double> scores;
  for (std::size_t i = 0; i < graph.users.size(); ++i)
    scores[graph.users[i]] = deg[static_cast<Eigen::Index>(i)] / n;
  return scores;
}

std::vector<std::string> top_k_by_indegree(const UserGraph& graph, int k) {
  Eigen::VectorXi deg = graph.in_degrees();
  std::vector<int> order(graph.users.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (deg[a] != deg[b]) return deg[a] > deg[b];
    return graph.users[a] < graph.users[b];
  });
  if (k < static_cast<int>(order.size())) order.resize(k);
  std::vector<std::string> out;
  out.reserve(order.size());
  for (int i : order) out.push_back(graph.users[i]);
  return out;
}

Eigen::VectorXd pagerank_scores(int n_nodes, const std::vector<std::pair<int, int>>& edges,
                                const PageRankOptions& options) {
  if (n_nodes <= 0) return Eigen::VectorXd();
  const double n = static_cast<double>(n_nodes);
  Eigen::VectorXd out_degree = Eigen::VectorXd::Zero(n_nodes);
  for (auto [src, dst] : edges) out_degree[src] += 1.0;

  Eigen::VectorXd x = Eigen::VectorXd::Constant(n_nodes, 1.0 / n);
  Eigen::VectorXd next(n_nodes);
  for (int iter = 0; iter < options.max_iter; ++iter) {
    double dangling = 0.0;
    for (int i = 0; i < n_nodes; ++i)
      if (out_degree[i] == 0.0) dangling += x[i];
    next.setConstant((1.0 - options.damping) / n + options.damping * dangling / n);
    for (auto [src, dst] : edges) next[dst] += options.damping * x[src] / out_degree[src];
    double change = (next - x).lpNorm<1>();
    x.swap(next);
    if (change <= options.tol) break;
  }
  return x;
}

UserGraph union_graph(const std::vector<const UserGraph*>& graphs) {
  UserGraph merged;
  std::set<std::string> users;
  std::set<std::pair<std::string, std::string>> edges;
  for (const UserGraph* g : graphs) {
    if (!g) continue;
    for (const auto& u : g->users) users.insert(u);
    for (auto [src, dst] : g->edges) edges.insert({g->users[src], g->users[dst]});
  }
  merged.users.assign(users.begin(), users.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < merged.users.size(); ++i)
    index[merged.users[i]] = static_cast<int>(i);
  for (const auto& [src, dst] : edges) merged.edges.emplace_back(index[src], index[dst]);
  std::sort(merged.edges.begin(), merged.edges.end());
  return merged;
}

bool InfluencerSet::contains(const std::string& user) const {
  for (const auto& [name, score] : members)
    if (name == user) return true;
  return false;
}

InfluencerSet windowed_pagerank(Date day, const std::vector<const UserGraph*>& window_graphs,
                                int k, const PageRankOptions& options) {
  InfluencerSet set;
  set.day = day;
  set.window_start = day - static_cast<int>(window_graphs.size());
  set.window_end = day - 1;

  UserGraph merged = union_graph(window_graphs);
  if (merged.empty()) return set;

  Eigen::VectorXd scores =
      pagerank_scores(static_cast<int>(merged.users.size()), merged.edges, options);
  std::vector<int> order(merged.users.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return merged.users[a] < merged.users[b];
  });
  if (k < static_cast<int>(order.size())) order.resize(k);
  for (int i : order) set.members.emplace_back(merged.users[i], scores[i]);
  return set;
}

double average_branching_number(const std::vector<ConversationTree>& trees) {
  if (trees.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& tree : trees) {
    if (tree.nodes.size() < 2) continue;  // single-node tree contributes 0
    std::vector<bool> has_child(tree.nodes.size(), false);
    for (auto [child, parent] : tree.edges) has_child[parent] = true;
    int non_leaf = static_cast<int>(std::count(has_child.begin(), has_child.end(), true));
    sum += static_cast<double>(tree.nodes.size() - 1) / static_cast<double>(non_leaf);
  }
  return sum / static_cast<double>(trees.size());
}

void write_edge_list_csv(std::ostream& out, const std::vector<const UserGraph*>& graphs) {
  out << "day,ticker,src,dst\n";
  for (const UserGraph* g : graphs)
    for (auto [src, dst] : g->edges)
      out << g->day.to_string() << ',' << csv_escape(g->ticker) << ','
          << csv_escape(g->users[src]) << ',' << csv_escape(g->users[dst]) << '\n';
}

void write_graph_summary_csv(std::ostream& out, const std::vector<const UserGraph*>& graphs) {
  out << "day,nodes,edges,top10_indegree\n";
  for (const UserGraph* g : graphs) {
    std::vector<std::string> top;
    if (!g->empty()) top = top_k_by_indegree(*g, 10);
    out << g->day.to_string() << ',' << g->users.size() << ',' << g->edges.size() << ','
        << csv_escape(join(top, ";")) << '\n';
  }
}

}  // namespace tickerwatch
