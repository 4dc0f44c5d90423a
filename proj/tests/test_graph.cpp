#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tickerwatch/common.hpp"
#include "tickerwatch/graph.hpp"
#include "tickerwatch/rng.hpp"

using namespace tickerwatch;

namespace {

ConversationTree make_tree(const std::string& id, const std::string& submitter, long score,
                           const std::vector<std::pair<std::string, int>>& comments) {
  // comments: (author, parent ordinal); ordinal 0 is the root.
  ConversationTree tree;
  tree.tree_id = id;
  tree.ticker = "GME";
  tree.day = Date::from_ymd(2021, 1, 14);
  MessageRecord root;
  root.message_id = id + "_root";
  root.author = submitter;
  root.submission_author = submitter;
  root.score = score;
  root.submission_score = score;
  tree.nodes.push_back(root);
  for (std::size_t i = 0; i < comments.size(); ++i) {
    MessageRecord node;
    node.message_id = id + "_c" + std::to_string(i);
    node.author = comments[i].first;
    node.submission_author = submitter;
    int parent = comments[i].second;
    node.parent_id = tree.nodes[parent].message_id;
    node.depth = tree.nodes[parent].depth + 1;
    tree.nodes.push_back(std::move(node));
    tree.edges.emplace_back(static_cast<int>(i) + 1, parent);
  }
  return tree;
}

/// Two stylized conversation threads reducing to the ten-user graph with the
/// submitters 0 and 6 as hubs; comments sit at several depths on purpose.
std::vector<ConversationTree> worked_example_trees() {
  // Tree 1: submitter "0"; commenters 1..4, nested chain 1<-3<-4.
  ConversationTree t1 = make_tree("k1", "0", 30, {{"1", 0}, {"2", 0}, {"3", 1}, {"4", 3}});
  // Tree 2: submitter "6"; commenters 5,7,8,9 with one second-level reply.
  ConversationTree t2 = make_tree("k2", "6", 20, {{"5", 0}, {"7", 0}, {"8", 1}, {"9", 2}});
  return {t1, t2};
}

/// Brute-force oracle: dense column-stochastic transition matrix with
/// explicit dangling handling, iterated to a much tighter tolerance.
Eigen::VectorXd dense_pagerank_oracle(int n, const std::vector<std::pair<int, int>>& edges,
                                      double damping) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd out_degree = Eigen::VectorXd::Zero(n);
  for (auto [src, dst] : edges) out_degree[src] += 1.0;
  for (auto [src, dst] : edges) a(dst, src) += 1.0 / out_degree[src];
  for (int j = 0; j < n; ++j)
    if (out_degree[j] == 0.0) a.col(j).setConstant(1.0 / n);
  Eigen::MatrixXd google = damping * a + (1.0 - damping) / n * Eigen::MatrixXd::Ones(n, n);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < 20000; ++it) {
    Eigen::VectorXd next = google * x;
    if ((next - x).lpNorm<1>() < 1e-15) return next;
    x = next;
  }
  return x;
}

std::vector<std::pair<int, int>> random_digraph(Rng& rng, int n, double density) {
  std::set<std::pair<int, int>> edges;
  int target = static_cast<int>(density * n * n);
  for (int e = 0; e < target; ++e) {
    int src = static_cast<int>(rng.bounded(n));
    int dst = static_cast<int>(rng.bounded(n));
    if (src != dst) edges.insert({src, dst});
  }
  return {edges.begin(), edges.end()};
}

}  // namespace

TEST_CASE("the worked two-tree example reduces to the ten-user hub graph") {
  UserGraph graph = reduce_trees(worked_example_trees());
  REQUIRE(graph.users.size() == 10);
  std::vector<std::string> expected_users{"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"};
  CHECK(graph.users == expected_users);
  // Every comment at any depth points at its submitter.
  std::set<std::pair<std::string, std::string>> edges;
  for (auto [src, dst] : graph.edges) edges.insert({graph.users[src], graph.users[dst]});
  std::set<std::pair<std::string, std::string>> expected{{"1", "0"}, {"2", "0"}, {"3", "0"},
                                                         {"4", "0"}, {"5", "6"}, {"7", "6"},
                                                         {"8", "6"}, {"9", "6"}};
  CHECK(edges == expected);

  auto centrality = in_degree_centrality(graph);
  CHECK(centrality.at("0") == doctest::Approx(0.4).epsilon(1e-15));  // 4 of 10
  CHECK(centrality.at("1") == 0.0);
}

TEST_CASE("self-comments never create an edge") {
  auto trees = std::vector<ConversationTree>{make_tree("k1", "A", 10, {{"B", 0}, {"A", 0}})};
  UserGraph graph = reduce_trees(trees);
  CHECK(graph.users == std::vector<std::string>{"A", "B"});
  REQUIRE(graph.edges.size() == 1);
  CHECK(graph.users[graph.edges[0].first] == "B");
  CHECK(graph.users[graph.edges[0].second] == "A");
}

TEST_CASE("repeated comments by one user collapse to a single edge") {
  auto trees =
      std::vector<ConversationTree>{make_tree("k1", "A", 10, {{"B", 0}, {"B", 1}, {"B", 0}})};
  UserGraph graph = reduce_trees(trees);
  CHECK(graph.edges.size() == 1);
}

TEST_CASE("sentinel authors are excluded from the graph") {
  auto trees =
      std::vector<ConversationTree>{make_tree("k1", "A", 10, {{"[deleted]", 0}, {"B", 0}})};
  UserGraph graph = reduce_trees(trees);
  CHECK(graph.users == std::vector<std::string>{"A", "B"});
  CHECK(graph.edges.size() == 1);
}

TEST_CASE("empty tree list reduces to a valid empty graph") {
  UserGraph graph = reduce_trees({});
  CHECK(graph.empty());
  CHECK_THROWS_AS(in_degree_centrality(graph), AnalysisError);
}

TEST_CASE("median/cascade filter keeps only qualifying submissions") {
  auto comments = [](int n) {
    std::vector<std::pair<std::string, int>> c;
    for (int i = 0; i < n; ++i) c.emplace_back("c" + std::to_string(i), 0);
    return c;
  };
  SUBCASE("strictly above the median of {1,5,9} keeps only the 9") {
    std::vector<ConversationTree> trees{make_tree("a", "A", 1, comments(12)),
                                        make_tree("b", "B", 5, comments(12)),
                                        make_tree("c", "C", 9, comments(12))};
    UserGraph graph = filtered_reduce(trees, 10, true);
    CHECK(graph.index_of("C") >= 0);
    CHECK(graph.index_of("A") < 0);
    CHECK(graph.index_of("B") < 0);
  }
  SUBCASE("a nine-comment cascade is excluded even with a high score") {
    std::vector<ConversationTree> trees{make_tree("a", "A", 7, comments(9))};
    UserGraph graph = filtered_reduce(trees, 10, true);
    CHECK(graph.empty());
  }
  SUBCASE("two equal scores both sit at the median and are excluded") {
    std::vector<ConversationTree> trees{make_tree("a", "A", 5, comments(12)),
                                        make_tree("b", "B", 5, comments(12))};
    UserGraph graph = filtered_reduce(trees, 10, true);
    CHECK(graph.empty());
    UserGraph relaxed = filtered_reduce(trees, 10, false);
    CHECK(relaxed.users.size() == 14);  // both submitters plus the shared commenters
  }
}

TEST_CASE("filtered graph is always a subgraph of the full reduction") {
  Rng rng(11);
  for (int rep = 0; rep < 60; ++rep) {
    std::vector<ConversationTree> trees;
    int n = 1 + static_cast<int>(rng.bounded(6));
    for (int t = 0; t < n; ++t) {
      std::vector<std::pair<std::string, int>> comments;
      int m = static_cast<int>(rng.bounded(15));
      for (int i = 0; i < m; ++i) comments.emplace_back("u" + std::to_string(rng.bounded(20)), 0);
      trees.push_back(make_tree("t" + std::to_string(t), "s" + std::to_string(rng.bounded(5)),
                                rng.range(0, 30), comments));
    }
    UserGraph full = reduce_trees(trees);
    UserGraph filtered = filtered_reduce(trees, 10, true);
    for (const auto& user : filtered.users) CHECK(full.index_of(user) >= 0);
    std::set<std::pair<std::string, std::string>> full_edges;
    for (auto [s, d] : full.edges) full_edges.insert({full.users[s], full.users[d]});
    for (auto [s, d] : filtered.edges)
      CHECK(full_edges.count({filtered.users[s], filtered.users[d]}) == 1);
  }
}

TEST_CASE("star graph in-degree scores use the graph size as denominator") {
  std::vector<std::pair<std::string, int>> comments;
  for (int i = 0; i < 5; ++i) comments.emplace_back("u" + std::to_string(i), 0);
  UserGraph graph = reduce_trees({make_tree("k", "hub", 10, comments)});
  auto scores = in_degree_centrality(graph);
  CHECK(scores.at("hub") == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  for (int i = 0; i < 5; ++i) CHECK(scores.at("u" + std::to_string(i)) == 0.0);
  CHECK(top_k_by_indegree(graph, 1) == std::vector<std::string>{"hub"});
}

TEST_CASE("two-node cycle splits centrality evenly") {
  std::vector<ConversationTree> trees{make_tree("k1", "A", 10, {{"B", 0}}),
                                      make_tree("k2", "B", 10, {{"A", 0}})};
  UserGraph graph = reduce_trees(trees);
  auto scores = in_degree_centrality(graph);
  CHECK(scores.at("A") == doctest::Approx(0.5));
  CHECK(scores.at("B") == doctest::Approx(0.5));
}

TEST_CASE("top-k ties break by raw in-degree then lexicographic id") {
  std::vector<ConversationTree> trees{make_tree("k1", "zeta", 10, {{"x", 0}}),
                                      make_tree("k2", "alpha", 10, {{"y", 0}})};
  UserGraph graph = reduce_trees(trees);
  CHECK(top_k_by_indegree(graph, 1) == std::vector<std::string>{"alpha"});
  CHECK(top_k_by_indegree(graph, 10).size() == 4);  // smaller graph returns all
}

TEST_CASE("ranking is invariant to the in-degree normalization choice") {
  Rng rng(5);
  for (int rep = 0; rep < 40; ++rep) {
    int n = 3 + static_cast<int>(rng.bounded(30));
    auto edges = random_digraph(rng, n, 0.15);
    Eigen::VectorXd deg = Eigen::VectorXd::Zero(n);
    for (auto [s, d] : edges) deg[d] += 1.0;
    std::vector<int> by_n(n), by_n_minus_1(n);
    for (int i = 0; i < n; ++i) by_n[i] = by_n_minus_1[i] = i;
    auto cmp = [&](double scale) {
      return [&deg, scale](int a, int b) {
        double sa = deg[a] / scale, sb = deg[b] / scale;
        if (sa != sb) return sa > sb;
        return a < b;
      };
    };
    std::sort(by_n.begin(), by_n.end(), cmp(static_cast<double>(n)));
    std::sort(by_n_minus_1.begin(), by_n_minus_1.end(), cmp(static_cast<double>(n - 1)));
    CHECK(by_n == by_n_minus_1);
  }
}

TEST_CASE("pagerank on a 2-cycle is (1/2, 1/2)") {
  Eigen::VectorXd scores = pagerank_scores(2, {{0, 1}, {1, 0}});
  CHECK(scores[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(scores[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pagerank on a 5-node star matches the dense oracle") {
  std::vector<std::pair<int, int>> edges{{1, 0}, {2, 0}, {3, 0}, {4, 0}};
  Eigen::VectorXd scores = pagerank_scores(5, edges);
  Eigen::VectorXd oracle = dense_pagerank_oracle(5, edges, 0.85);
  CHECK((scores - oracle).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(std::abs(scores.sum() - 1.0) < 1e-9);
}

TEST_CASE("dangling mass is redistributed so scores sum to one") {
  // 0 -> 1 -> 2, node 2 is a sink.
  std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}};
  Eigen::VectorXd scores = pagerank_scores(3, edges);
  CHECK(std::abs(scores.sum() - 1.0) < 1e-9);
  Eigen::VectorXd oracle = dense_pagerank_oracle(3, edges, 0.85);
  CHECK((scores - oracle).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("pagerank of a vertex-transitive cycle is uniform") {
  int n = 7;
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  Eigen::VectorXd scores = pagerank_scores(n, edges);
  for (int i = 0; i < n; ++i) CHECK(scores[i] == doctest::Approx(1.0 / n).epsilon(1e-9));
}

TEST_CASE("pagerank matches the dense oracle on random graphs") {
  Rng rng(31);
  for (int rep = 0; rep < 25; ++rep) {
    int n = 2 + static_cast<int>(rng.bounded(60));
    auto edges = random_digraph(rng, n, 0.08);
    Eigen::VectorXd scores = pagerank_scores(n, edges);
    Eigen::VectorXd oracle = dense_pagerank_oracle(n, edges, 0.85);
    CHECK((scores - oracle).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(scores.sum() - 1.0) < 1e-9);
    CHECK(scores.minCoeff() >= 0.0);
  }
}

TEST_CASE("windowed influencers are the top-k by union-graph pagerank") {
  std::vector<UserGraph> window;
  for (int day = 0; day < 3; ++day) {
    std::vector<std::pair<std::string, int>> comments;
    for (int i = 0; i < 4; ++i) comments.emplace_back("fan" + std::to_string((day + i) % 6), 0);
    UserGraph g = reduce_trees({make_tree("k" + std::to_string(day), "leader", 10, comments)});
    g.day = Date::from_ymd(2021, 1, 4) + day;
    window.push_back(std::move(g));
  }
  std::vector<const UserGraph*> ptrs;
  for (const auto& g : window) ptrs.push_back(&g);
  InfluencerSet set = windowed_pagerank(Date::from_ymd(2021, 1, 7), ptrs, 3);
  REQUIRE(set.members.size() == 3);
  CHECK(set.members[0].first == "leader");
  CHECK(set.contains("leader"));
  CHECK(set.window_end == Date::from_ymd(2021, 1, 6));

  // Duplicate cross-day edges collapse: the union stays a simple graph.
  UserGraph merged = union_graph(ptrs);
  std::set<std::pair<int, int>> unique_edges(merged.edges.begin(), merged.edges.end());
  CHECK(unique_edges.size() == merged.edges.size());
}

TEST_CASE("empty window produces an empty influencer set") {
  InfluencerSet set = windowed_pagerank(Date::from_ymd(2021, 1, 7), {}, 20);
  CHECK(set.empty());
}

TEST_CASE("average branching number worked values") {
  SUBCASE("root plus three direct comments is 3.0") {
    auto tree = make_tree("k", "A", 10, {{"b", 0}, {"c", 0}, {"d", 0}});
    CHECK(average_branching_number({tree}) == doctest::Approx(3.0));
  }
  SUBCASE("a two-comment chain is 1.0") {
    auto tree = make_tree("k", "A", 10, {{"b", 0}, {"c", 1}});
    CHECK(average_branching_number({tree}) == doctest::Approx(1.0));
  }
  SUBCASE("the daily value is the mean over trees") {
    auto t1 = make_tree("k1", "A", 10, {{"b", 0}, {"c", 0}, {"d", 0}});
    auto t2 = make_tree("k2", "B", 10, {{"b", 0}, {"c", 1}});
    CHECK(average_branching_number({t1, t2}) == doctest::Approx(2.0));
  }
  SUBCASE("single-node trees contribute zero, empty days are zero") {
    auto lone = make_tree("k", "A", 10, {});
    CHECK(average_branching_number({lone}) == 0.0);
    CHECK(average_branching_number({}) == 0.0);
  }
}

TEST_CASE("any multi-node tree has branching number at least one") {
  Rng rng(77);
  for (int rep = 0; rep < 100; ++rep) {
    int m = 1 + static_cast<int>(rng.bounded(12));
    std::vector<std::pair<std::string, int>> comments;
    for (int i = 0; i < m; ++i)
      comments.emplace_back("u" + std::to_string(i), static_cast<int>(rng.bounded(i + 1)));
    auto tree = make_tree("k", "A", 10, comments);
    CHECK(average_branching_number({tree}) >= 1.0);
  }
}

TEST_CASE("reduction bounds: no self-loops and edges at most users x submissions") {
  Rng rng(13);
  for (int rep = 0; rep < 60; ++rep) {
    std::vector<ConversationTree> trees;
    int n_trees = 1 + static_cast<int>(rng.bounded(5));
    for (int t = 0; t < n_trees; ++t) {
      std::vector<std::pair<std::string, int>> comments;
      int m = static_cast<int>(rng.bounded(10));
      for (int i = 0; i < m; ++i) comments.emplace_back("u" + std::to_string(rng.bounded(8)), 0);
      trees.push_back(make_tree("t" + std::to_string(t), "u" + std::to_string(rng.bounded(8)),
                                rng.range(0, 9), comments));
    }
    UserGraph graph = reduce_trees(trees);
    for (auto [src, dst] : graph.edges) CHECK(src != dst);
    CHECK(graph.edges.size() <= graph.users.size() * trees.size());
    if (!graph.empty()) {
      double n = static_cast<double>(graph.users.size());
      for (const auto& [user, score] : in_degree_centrality(graph)) {
        CHECK(score >= 0.0);
        CHECK(score <= (n - 1.0) / n);
      }
    }
    // Determinism: re-reducing the same trees gives the identical graph.
    UserGraph again = reduce_trees(trees);
    CHECK(again.users == graph.users);
    CHECK(again.edges == graph.edges);
  }
}

TEST_CASE("graph exports carry the audit columns") {
  UserGraph graph = reduce_trees(worked_example_trees());
  std::ostringstream edges_out, summary_out;
  write_edge_list_csv(edges_out, {&graph});
  write_graph_summary_csv(summary_out, {&graph});
  CHECK(edges_out.str().find("day,ticker,src,dst") == 0);
  CHECK(edges_out.str().find("2021-01-14,GME,1,0") != std::string::npos);
  CHECK(summary_out.str().find("day,nodes,edges,top10_indegree") == 0);
  CHECK(summary_out.str().find("2021-01-14,10,8,") != std::string::npos);
}
