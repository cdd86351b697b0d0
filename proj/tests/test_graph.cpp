#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "tam/graph.hpp"

#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace tam;
using support::TempDir;
using support::TestRng;

TEST_CASE("csr construction symmetrizes, sorts, and deduplicates", "[graph]") {
  // Duplicates in both directions and a self-loop; all collapse away.
  auto a = build_adjacency(4, {{1, 0}, {0, 1}, {2, 1}, {2, 2}, {3, 0}, {0, 3}, {1, 2}});
  CHECK(a.num_edges() == 3);
  CHECK(a.degree(0) == 2);
  CHECK(a.degree(2) == 1);
  CHECK(a.has_edge(0, 1));
  CHECK(a.has_edge(1, 0));
  CHECK_FALSE(a.has_edge(2, 2));
  CHECK_FALSE(a.has_edge(0, 2));
  auto nb = a.neighbors(0);
  REQUIRE(nb.size() == 2);
  CHECK(nb[0] == 1);
  CHECK(nb[1] == 3);
  auto edges = a.undirected_edges();
  REQUIRE(edges.size() == 3);
  CHECK(edges[0] == std::pair<NodeId, NodeId>{0, 1});
  CHECK(edges[1] == std::pair<NodeId, NodeId>{0, 3});
  CHECK(edges[2] == std::pair<NodeId, NodeId>{1, 2});
  CHECK_THROWS_AS(build_adjacency(2, {{0, 2}}), ValidationError);
  CHECK_THROWS_AS(build_adjacency(2, {{-1, 0}}), ValidationError);
}

TEST_CASE("csr invariants hold on random graphs", "[graph]") {
  TestRng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    NodeId n = 3 + rng.below(20);
    auto a = build_adjacency(n, support::random_edges(rng, n, 2 * n));
    for (NodeId i = 0; i < n; ++i) {
      auto nb = a.neighbors(i);
      for (std::size_t p = 0; p + 1 < nb.size(); ++p) REQUIRE(nb[p] < nb[p + 1]);
      for (NodeId j : nb) {
        REQUIRE(j != i);
        REQUIRE(a.has_edge(j, i));  // symmetry
      }
    }
  }
}

TEST_CASE("loading a clean triangle", "[graph]") {
  TempDir dir("tam-graph");
  support::write_text(dir.file("g.edges"), "0 1\n1 2\n0 2\n");
  support::write_text(dir.file("g.attrs.csv"), "1,0\n0,1\n1,1\n");
  auto loaded = load_graph(dir.file("g.edges"), dir.file("g.attrs.csv"));
  CHECK(loaded.graph.num_nodes() == 3);
  CHECK(loaded.graph.adjacency.num_edges() == 3);
  CHECK(loaded.graph.num_attributes() == 2);
  CHECK(loaded.stats.self_loops_dropped == 0);
  CHECK(loaded.stats.duplicate_edges_dropped == 0);
  CHECK(loaded.stats.isolated_nodes_removed == 0);
  CHECK(loaded.graph.attributes(2, 1) == 1.0);
}

TEST_CASE("loading drops self-loops and duplicates with counts", "[graph]") {
  TempDir dir("tam-graph");
  // 1-1 self-loop, 0-1 three times (once reversed), 1-2 once.
  support::write_text(dir.file("g.edges"), "1 1\n0 1\n1 0\n0 1\n1 2\n");
  support::write_text(dir.file("g.attrs.csv"), "1\n2\n3\n");
  auto loaded = load_graph(dir.file("g.edges"), dir.file("g.attrs.csv"));
  CHECK(loaded.stats.self_loops_dropped == 1);
  CHECK(loaded.stats.duplicate_edges_dropped == 2);
  CHECK(loaded.graph.adjacency.num_edges() == 2);
}

TEST_CASE("loading removes isolated nodes and remaps ids", "[graph]") {
  TempDir dir("tam-graph");
  // Six attribute rows; the edge list references only 0,2,4,5. An id is
  // isolated exactly when it appears in no line of the raw text; scan the
  // text independently to get the expected removals.
  const std::string edge_text = "0 2\n2 4\n4 5\n5 0\n";
  support::write_text(dir.file("g.edges"), edge_text);
  support::write_text(dir.file("g.attrs.csv"), "0\n10\n20\n30\n40\n50\n");
  support::write_text(dir.file("g.labels"), "0\n1\n0\n1\n1\n0\n");

  std::set<NodeId> present;
  std::istringstream scan(edge_text);
  NodeId u, v;
  while (scan >> u >> v) {
    present.insert(u);
    present.insert(v);
  }

  auto loaded = load_graph(dir.file("g.edges"), dir.file("g.attrs.csv"),
                           dir.file("g.labels"));
  CHECK(loaded.stats.isolated_nodes_removed == 6 - static_cast<Index>(present.size()));
  CHECK(loaded.graph.num_nodes() == static_cast<NodeId>(present.size()));
  for (NodeId orig = 0; orig < 6; ++orig) {
    NodeId mapped = loaded.stats.old_to_new[static_cast<std::size_t>(orig)];
    if (present.count(orig)) {
      REQUIRE(mapped >= 0);
      CHECK(loaded.stats.new_to_old[static_cast<std::size_t>(mapped)] == orig);
      // Attribute and label rows moved with the node.
      CHECK(loaded.graph.attributes(mapped, 0) == static_cast<double>(orig * 10));
    } else {
      CHECK(mapped == -1);
    }
  }
  REQUIRE(loaded.graph.labels.has_value());
  CHECK((*loaded.graph.labels)[static_cast<std::size_t>(
            loaded.stats.old_to_new[4])] == 1);
  for (NodeId i = 0; i < loaded.graph.num_nodes(); ++i)
    CHECK(loaded.graph.adjacency.degree(i) >= 1);
}

TEST_CASE("load errors carry file and line information", "[graph]") {
  TempDir dir("tam-graph");
  support::write_text(dir.file("bad.edges"), "0 1\nnope\n");
  support::write_text(dir.file("g.attrs.csv"), "1\n2\n");
  CHECK_THROWS_MATCHES(load_graph(dir.file("bad.edges"), dir.file("g.attrs.csv")),
                       ParseError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("bad.edges:2")));

  support::write_text(dir.file("range.edges"), "0 5\n");
  CHECK_THROWS_AS(load_graph(dir.file("range.edges"), dir.file("g.attrs.csv")),
                  ParseError);

  support::write_text(dir.file("ragged.csv"), "1,2\n3\n");
  support::write_text(dir.file("ok.edges"), "0 1\n");
  CHECK_THROWS_MATCHES(load_graph(dir.file("ok.edges"), dir.file("ragged.csv")),
                       ParseError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("ragged.csv:2")));

  CHECK_THROWS_AS(load_graph(dir.file("missing.edges"), dir.file("g.attrs.csv")),
                  IoError);

  support::write_text(dir.file("bad.labels"), "0\n2\n");
  CHECK_THROWS_AS(load_graph(dir.file("ok.edges"), dir.file("g.attrs.csv"),
                             dir.file("bad.labels")),
                  ParseError);
  support::write_text(dir.file("short.labels"), "0\n");
  CHECK_THROWS_AS(load_graph(dir.file("ok.edges"), dir.file("g.attrs.csv"),
                             dir.file("short.labels")),
                  ParseError);
}

TEST_CASE("write then load round-trips a graph exactly", "[graph]") {
  TestRng rng(55);
  auto g = support::random_graph(rng, 12, 5, 20);
  TempDir dir("tam-graph");
  write_edge_list(dir.file("g.edges"), g.adjacency);
  write_attribute_csv(dir.file("g.attrs.csv"), g.attributes);
  auto loaded = load_graph(dir.file("g.edges"), dir.file("g.attrs.csv"));
  REQUIRE(loaded.graph.num_nodes() == g.num_nodes());
  CHECK(loaded.graph.adjacency == g.adjacency);
  CHECK(loaded.graph.attributes == g.attributes);  // bitwise, via exact formatting
}

TEST_CASE("formatted doubles round-trip and integers stay plain", "[graph]") {
  CHECK(detail::format_double(120.0) == "120");
  CHECK(detail::format_double(-3.0) == "-3");
  CHECK(detail::format_double(0.0) == "0");
  CHECK(detail::format_double(0.985) == "0.985");
  TestRng rng(56);
  for (int i = 0; i < 200; ++i) {
    double x = rng.uniform(-1e6, 1e6) * std::pow(10.0, rng.below(7) - 3);
    double back = std::stod(detail::format_double(x));
    CHECK(back == x);
  }
}

TEST_CASE("symmetric normalization of a single edge", "[graph]") {
  auto a = build_adjacency(2, {{0, 1}});
  auto plain = symmetric_normalize(a, false);
  // Degrees 1,1: the off-diagonal entries are exactly 1.
  REQUIRE(plain.col.size() == 2);
  CHECK(plain.val[0] == 1.0);
  CHECK(plain.val[1] == 1.0);

  auto looped = symmetric_normalize(a, true);
  // Degrees 2,2: every entry is 1/2 up to the rounding of (1/sqrt 2)^2.
  REQUIRE(looped.col.size() == 4);
  for (double v : looped.val) CHECK_THAT(v, Catch::Matchers::WithinAbs(0.5, 1e-15));
}

TEST_CASE("degree-0 nodes are rejected without self-loops", "[graph]") {
  auto g = make_graph(Matrix::Zero(3, 1), {{0, 1}});  // node 2 isolated
  CHECK_THROWS_AS(symmetric_normalize(g.adjacency, false), ValidationError);
  CHECK_NOTHROW(symmetric_normalize(g.adjacency, true));
}

TEST_CASE("normalization and spmm match the dense oracle", "[graph]") {
  TestRng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    NodeId n = 4 + rng.below(8);
    auto edges = support::random_edges(rng, n, n);
    auto a = build_adjacency(n, edges);
    for (bool loops : {false, true}) {
      auto norm = symmetric_normalize(a, loops);
      oracle::Dense ref = oracle::dense_symmetric_normalize(support::to_dense(a), loops);
      Matrix x = support::random_matrix(rng, n, 3);
      Matrix got = spmm(norm, x);
      oracle::Dense want = oracle::matmul(ref, support::to_dense(x));
      for (NodeId i = 0; i < n; ++i)
        for (Index j = 0; j < 3; ++j)
          REQUIRE_THAT(got(i, j),
                       Catch::Matchers::WithinAbs(
                           want[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                           1e-12));
    }
  }
}

TEST_CASE("edge distances on a 3-4-5 triangle", "[graph]") {
  Matrix x(3, 2);
  x << 0, 0, 3, 0, 3, 4;
  auto g = make_graph(x, {{0, 1}, {1, 2}, {0, 2}});
  auto dm = edge_distances(g);
  REQUIRE(dm.edges.size() == 3);
  // Canonical order (0,1), (0,2), (1,2).
  CHECK(dm.dist[0] == 3.0);
  CHECK(dm.dist[1] == 5.0);
  CHECK(dm.dist[2] == 4.0);
  CHECK(dm.mean == 4.0);
  CHECK(dm.node_max[0] == 5.0);
  CHECK(dm.node_max[1] == 4.0);
  CHECK(dm.node_max[2] == 5.0);
}

TEST_CASE("identical attributes give all-zero distances", "[graph]") {
  Matrix x = Matrix::Ones(4, 3);
  auto g = make_graph(x, {{0, 1}, {1, 2}, {2, 3}});
  auto dm = edge_distances(g);
  for (double d : dm.dist) CHECK(d == 0.0);
  CHECK(dm.mean == 0.0);
  for (NodeId i = 0; i < 4; ++i) CHECK(dm.node_max[static_cast<std::size_t>(i)] == 0.0);
}

TEST_CASE("edge distances match a brute-force recomputation", "[graph]") {
  TestRng rng(13);
  auto g = support::random_graph(rng, 9, 4, 12);
  auto dm = edge_distances(g);
  double sum = 0.0;
  for (std::size_t e = 0; e < dm.edges.size(); ++e) {
    auto [u, v] = dm.edges[e];
    double want = 0.0;
    for (Index d = 0; d < g.num_attributes(); ++d) {
      double diff = g.attributes(u, d) - g.attributes(v, d);
      want += diff * diff;
    }
    want = std::sqrt(want);
    REQUIRE_THAT(dm.dist[e], Catch::Matchers::WithinAbs(want, 1e-12));
    sum += dm.dist[e];
  }
  REQUIRE_THAT(dm.mean, Catch::Matchers::WithinAbs(sum / dm.edges.size(), 1e-12));
}

TEST_CASE("node max distances are permutation equivariant", "[graph]") {
  TestRng rng(29);
  NodeId n = 8;
  auto g = support::random_graph(rng, n, 3, 10);
  auto dm = edge_distances(g);

  // Reverse the node order.
  std::vector<NodeId> perm(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = n - 1 - i;
  Matrix px(n, g.num_attributes());
  for (NodeId i = 0; i < n; ++i) px.row(perm[static_cast<std::size_t>(i)]) = g.attributes.row(i);
  std::vector<std::pair<NodeId, NodeId>> pedges;
  for (auto [u, v] : g.adjacency.undirected_edges())
    pedges.emplace_back(perm[static_cast<std::size_t>(u)], perm[static_cast<std::size_t>(v)]);
  auto pg = make_graph(px, pedges);
  auto pdm = edge_distances(pg);
  for (NodeId i = 0; i < n; ++i)
    CHECK(pdm.node_max[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] ==
          dm.node_max[static_cast<std::size_t>(i)]);
}

TEST_CASE("homophily of hand-built neighborhoods", "[graph]") {
  // Star: center 0 with two same-label and two different-label leaves.
  auto star = make_graph(Matrix::Zero(5, 1), {{0, 1}, {0, 2}, {0, 3}, {0, 4}},
                         std::vector<int>{0, 0, 0, 1, 1});
  auto s = homophily_stats(star);
  CHECK(s.homo[0] == 0.5);
  CHECK(s.hetero[0] == 0.5);
  CHECK(s.homo[1] == 1.0);
  CHECK(s.homo[3] == 0.0);
  CHECK(s.anomaly_adjacent_edges == 2);

  auto uniform = make_graph(Matrix::Zero(4, 1), {{0, 1}, {1, 2}, {2, 3}},
                            std::vector<int>{0, 0, 0, 0});
  auto su = homophily_stats(uniform);
  for (NodeId i = 0; i < 4; ++i) CHECK(su.homo[i] == 1.0);
  CHECK(su.mean_homo_normal == 1.0);
  CHECK(su.counted_anomaly == 0);
  CHECK(std::isnan(su.mean_homo_anomaly));
}

TEST_CASE("homophily complements sum to one and means match brute force", "[graph]") {
  TestRng rng(31);
  NodeId n = 14;
  auto g = support::random_graph(rng, n, 2, 20);
  std::vector<int> labels;
  for (NodeId i = 0; i < n; ++i) labels.push_back(rng.below(4) == 0 ? 1 : 0);
  if (std::count(labels.begin(), labels.end(), 1) == 0) labels[0] = 1;
  auto s = homophily_stats(g.adjacency, labels);

  double sum0 = 0, sum1 = 0;
  Index c0 = 0, c1 = 0;
  for (NodeId i = 0; i < n; ++i) {
    REQUIRE(s.homo[i] + s.hetero[i] == 1.0);
    Index same = 0, deg = 0;
    for (NodeId j : g.adjacency.neighbors(i)) {
      ++deg;
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) ++same;
    }
    REQUIRE(s.homo[i] == static_cast<double>(same) / static_cast<double>(deg));
    (labels[static_cast<std::size_t>(i)] == 0 ? sum0 : sum1) += s.homo[i];
    (labels[static_cast<std::size_t>(i)] == 0 ? c0 : c1) += 1;
  }
  CHECK_THAT(s.mean_homo_normal, Catch::Matchers::WithinAbs(sum0 / c0, 1e-15));
  CHECK_THAT(s.mean_homo_anomaly, Catch::Matchers::WithinAbs(sum1 / c1, 1e-15));
}

TEST_CASE("homophily skips nodes without edges", "[graph]") {
  auto g = make_graph(Matrix::Zero(3, 1), {{0, 1}}, std::vector<int>{0, 0, 1});
  auto s = homophily_stats(g);
  CHECK(std::isnan(s.homo[2]));
  CHECK(s.counted_anomaly == 0);
  CHECK(s.counted_normal == 2);
  CHECK(s.anomaly_adjacent_edges == 0);
}

TEST_CASE("homophily requires valid labels", "[graph]") {
  auto g = make_graph(Matrix::Zero(3, 1), {{0, 1}, {1, 2}});
  CHECK_THROWS_AS(homophily_stats(g), ValidationError);
  CHECK_THROWS_AS(homophily_stats(g.adjacency, std::vector<int>{0, 1}), ValidationError);
  CHECK_THROWS_AS(homophily_stats(g.adjacency, std::vector<int>{0, 1, 7}), ValidationError);
}
