#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tickerwatch/dates.hpp"
#include "tickerwatch/ingest.hpp"

namespace tickerwatch {

/// Directed per-day user interaction graph: one node per active user, one
/// edge commenter -> submission author. Simple (no duplicate edges) and
/// loop-free; sentinel authors never enter.
struct UserGraph {
  Date day{};
  std::string ticker;
  std::vector<std::string> users;          // sorted, unique
  std::vector<std::pair<int, int>> edges;  // (src, dst) sorted, unique

  bool empty() const { return users.empty(); }
  int index_of(const std::string& user) const;
  Eigen::VectorXi in_degrees() const;
};

/// Flattens conversation trees of one (day, ticker) into the user graph:
/// every comment at any depth becomes an edge to the root submitter,
/// repeated interactions collapse, self-comments are skipped.
UserGraph reduce_trees(const std::vector<ConversationTree>& trees);

/// As reduce_trees, but keeps only trees whose submission score is above the
/// day's median (strictly, unless strict_median is false) and whose cascade
/// has at least min_cascade comments.
UserGraph filtered_reduce(const std::vector<ConversationTree>& trees, int min_cascade = 10,
                          bool strict_median = true);

/// In-degree centrality with the graph size as denominator:
/// score(i) = in_degree(i) / |N|. Throws AnalysisError on an empty graph.
std::map<std::string, double> in_degree_centrality(const UserGraph& graph);

/// Top-k users by in-degree score; ties broken by raw in-degree, then
/// lexicographic user id. Returns all users when the graph is smaller than k.
std::vector<std::string> top_k_by_indegree(const UserGraph& graph, int k);

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-9;  // L1 change between iterations
  int max_iter = 200;
};

/// PageRank over an edge list (src distributes to dst); dangling mass is
/// redistributed uniformly, so scores always sum to 1.
Eigen::VectorXd pagerank_scores(int n_nodes, const std::vector<std::pair<int, int>>& edges,
                                const PageRankOptions& options = {});

/// Unweighted union of several daily graphs: duplicate cross-day edges
/// collapse, mirroring the per-day simple-graph reduction.
UserGraph union_graph(const std::vector<const UserGraph*>& graphs);

struct InfluencerSet {
  Date day{};
  Date window_start{};
  Date window_end{};
  std::vector<std::pair<std::string, double>> members;  // descending score

  bool empty() const { return members.empty(); }
  bool contains(const std::string& user) const;
};

/// PageRank influencers over a trailing window of daily graphs: the top
/// k users by score on the window union graph.
InfluencerSet windowed_pagerank(Date day, const std::vector<const UserGraph*>& window_graphs,
                                int k, const PageRankOptions& options = {});

/// Mean over trees of (non-root nodes) / (non-leaf nodes); single-node trees
/// contribute 0, an empty day is 0.
double average_branching_number(const std::vector<ConversationTree>& trees);

/// Audit exports: `day,ticker,src,dst` edge list and a per-day summary
/// `day,nodes,edges,top10_indegree`.
void write_edge_list_csv(std::ostream& out, const std::vector<const UserGraph*>& graphs);
void write_graph_summary_csv(std::ostream& out, const std::vector<const UserGraph*>& graphs);

}  // namespace tickerwatch
