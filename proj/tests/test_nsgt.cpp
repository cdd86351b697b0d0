#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "tam/nsgt.hpp"
#include "tam/synthetic.hpp"

#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace tam;
using support::TestRng;

namespace {

std::set<std::pair<NodeId, NodeId>> edge_set(const CsrAdjacency& a) {
  auto e = a.undirected_edges();
  return {e.begin(), e.end()};
}

// Chain on 1-D attribute positions 0, 2, 10, 24, 30:
// distances 2, 8, 14, 6; mean 7.5.
AttributedGraph probe_chain() {
  Matrix x(5, 1);
  x << 0, 2, 10, 24, 30;
  return make_graph(x, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
}

}  // namespace

TEST_CASE("removal probability closed form", "[nsgt]") {
  // One endpoint at (4-2)/(6-2), the other at (4-2)/(5-2).
  CHECK_THAT(removal_probability(4, 2, 6, 5),
             Catch::Matchers::WithinAbs(0.5 * (2.0 / 3.0), 1e-15));
  // Distance at or below the mean never goes.
  CHECK(removal_probability(2, 2, 6, 5) == 0.0);
  CHECK(removal_probability(1, 2, 6, 5) == 0.0);
  // A node whose max does not exceed the mean never flags.
  CHECK(removal_probability(4, 4, 4, 9) == 0.0);
  // The edge is the max on both sides: certain removal.
  CHECK(removal_probability(6, 2, 6, 6) == 1.0);
}

TEST_CASE("closed form matches the two-uniform mechanism", "[nsgt]") {
  // Draw both radii as the mechanism does and count joint exceedances.
  struct Case {
    double d, mean, mi, mj;
  } cases[] = {{4, 2, 6, 5}, {5, 2, 6, 8}, {3, 2.5, 6, 3.5}, {7, 1, 7.5, 9}};
  TestRng rng(2024);
  for (const auto& c : cases) {
    const int trials = 40000;
    int removed = 0;
    for (int t = 0; t < trials; ++t) {
      double ri = c.mean + (c.mi - c.mean) * rng.uniform(0, 1);
      double rj = c.mean + (c.mj - c.mean) * rng.uniform(0, 1);
      if (c.d > ri && c.d > rj) ++removed;
    }
    double p = oracle::analytic_removal_probability(c.d, c.mean, c.mi, c.mj);
    REQUIRE(p == removal_probability(c.d, c.mean, c.mi, c.mj));
    double sigma = std::sqrt(trials * p * (1 - p));
    CHECK(std::abs(removed - trials * p) <= 3.0 * sigma + 1e-9);
  }
}

TEST_CASE("equal distances stop the truncation", "[nsgt]") {
  auto g = make_graph(Matrix::Ones(5, 2) * 3.0,
                      {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
  auto wes = WeightedEdgeSet::from_distances(edge_distances(g), 5);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto step = truncate_once(wes, seed, 1);
    CHECK(step.removed.empty());
    CHECK(step.remaining.edges.size() == 5);
  }
}

TEST_CASE("an edge that is the max at both ends always goes", "[nsgt]") {
  auto g = probe_chain();
  auto wes = WeightedEdgeSet::from_distances(edge_distances(g), 5);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto step = truncate_once(wes, seed, 1);
    // Edge (2,3), distance 14: max on both sides, mean 7.5 -> certain.
    bool has_23 = false;
    for (auto [u, v] : step.remaining.edges) has_23 = has_23 || (u == 2 && v == 3);
    CHECK_FALSE(has_23);
    // Edges at distance <= mean never go.
    bool has_01 = false, has_34 = false;
    for (auto [u, v] : step.remaining.edges) {
      has_01 = has_01 || (u == 0 && v == 1);
      has_34 = has_34 || (u == 3 && v == 4);
    }
    CHECK(has_01);
    CHECK(has_34);
  }
}

TEST_CASE("empirical removal rate matches the closed form", "[nsgt]") {
  auto g = probe_chain();
  auto wes = WeightedEdgeSet::from_distances(edge_distances(g), 5);
  // Edge (1,2), distance 8: endpoint 1 flags surely (its max is 8), endpoint
  // 2 flags with (8-7.5)/(14-7.5) = 1/13.
  const double p = 1.0 / 13.0;
  const int trials = 4000;
  int removed = 0;
  for (int seed = 0; seed < trials; ++seed) {
    auto step = truncate_once(wes, static_cast<std::uint64_t>(seed), 1);
    bool gone = true;
    for (auto [u, v] : step.remaining.edges) gone = gone && !(u == 1 && v == 2);
    removed += gone ? 1 : 0;
  }
  double sigma = std::sqrt(trials * p * (1 - p));
  CHECK(std::abs(removed - trials * p) <= 3.0 * sigma);
}

TEST_CASE("truncation sequence is nested and attributes removals", "[nsgt]") {
  TestRng rng(404);
  for (int trial = 0; trial < 5; ++trial) {
    auto g = support::random_graph(rng, 20, 4, 40);
    auto ts = truncate_sequence(g, 4, 1234 + static_cast<std::uint64_t>(trial));
    REQUIRE(ts.depth() == 4);
    auto original = edge_set(g.adjacency);
    auto prev = original;
    for (int k = 1; k <= 4; ++k) {
      auto current = edge_set(ts.level(k));
      for (const auto& e : current) REQUIRE(prev.count(e) == 1);  // nesting
      prev = current;
    }
    // removed_at agrees with the levels.
    auto edges = g.adjacency.undirected_edges();
    REQUIRE(ts.removed_at.size() == edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      int k = ts.removed_at[e];
      if (k == 0) {
        CHECK(edge_set(ts.level(4)).count(edges[e]) == 1);
      } else {
        REQUIRE(k >= 1);
        REQUIRE(k <= 4);
        if (k > 1) CHECK(edge_set(ts.level(k - 1)).count(edges[e]) == 1);
        CHECK(edge_set(ts.level(k)).count(edges[e]) == 0);
      }
    }
  }
}

TEST_CASE("removals always had positive probability", "[nsgt]") {
  TestRng rng(505);
  auto g = support::random_graph(rng, 15, 3, 25);
  const std::uint64_t seed = 99;
  // Replay the sequence step by step and check every removed edge against
  // the closed form computed from that iteration's own mean and maxima.
  auto wes = WeightedEdgeSet::from_distances(edge_distances(g), g.num_nodes());
  for (Index k = 1; k <= 4; ++k) {
    double mean = wes.mean_dist();
    auto mx = wes.node_max();
    auto step = truncate_once(wes, seed, k);
    for (std::size_t pos : step.removed) {
      auto [u, v] = wes.edges[pos];
      double p = removal_probability(wes.dist[pos], mean,
                                     mx[static_cast<std::size_t>(u)],
                                     mx[static_cast<std::size_t>(v)]);
      REQUIRE(p > 0.0);
      REQUIRE(wes.dist[pos] > mean);
    }
    wes = std::move(step.remaining);
  }
}

TEST_CASE("truncation is deterministic in the seed", "[nsgt]") {
  TestRng rng(606);
  auto g = support::random_graph(rng, 25, 4, 60);
  auto a = truncate_sequence(g, 4, 7);
  auto b = truncate_sequence(g, 4, 7);
  REQUIRE(a.depth() == b.depth());
  for (int k = 1; k <= 4; ++k) CHECK(a.level(k) == b.level(k));
  CHECK(a.removed_at == b.removed_at);
}

TEST_CASE("bridge edges out-rank intra-cluster edges analytically", "[nsgt]") {
  // Normals on a line plus one distant anomaly: every normal-anomaly edge
  // distance tops every normal-normal distance and the mean, and the closed
  // form must rank the bridges strictly higher in iteration one.
  Matrix x(7, 1);
  x << 0, 1, 2, 3, 4, 5, 11;
  std::vector<int> labels = {0, 0, 0, 0, 0, 0, 1};
  auto g = make_graph(
      x, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {5, 6}, {4, 6}}, labels);
  auto wes = WeightedEdgeSet::from_distances(edge_distances(g), g.num_nodes());
  const double mean = wes.mean_dist();  // 23/8
  const auto mx = wes.node_max();
  double max_nn = 0.0, min_na = 1.0;
  for (std::size_t e = 0; e < wes.edges.size(); ++e) {
    auto [u, v] = wes.edges[e];
    double p = removal_probability(wes.dist[e], mean,
                                   mx[static_cast<std::size_t>(u)],
                                   mx[static_cast<std::size_t>(v)]);
    if (labels[static_cast<std::size_t>(u)] == 1 || labels[static_cast<std::size_t>(v)] == 1)
      min_na = std::min(min_na, p);
    else
      max_nn = std::max(max_nn, p);
  }
  CHECK(min_na > max_nn);
  // The extremes in closed form: the long normal edge (0,5) against the
  // nearer of the two bridges.
  CHECK_THAT(max_nn, Catch::Matchers::WithinAbs(2.125 / 3.125, 1e-15));
  CHECK_THAT(min_na, Catch::Matchers::WithinAbs(3.125 / 4.125, 1e-15));
}

TEST_CASE("truncation cleans anomalous edges on the benchmark", "[nsgt]") {
  BenchmarkConfig cfg;
  cfg.nodes_per_cluster = 60;
  cfg.num_anomalies = 8;
  cfg.seed = 3;
  auto g = make_benchmark(cfg);
  auto ts = truncate_sequence(g, 4, 11);
  auto before = homophily_stats(g);
  REQUIRE(before.anomaly_adjacent_edges > 0);
  auto after = homophily_stats(ts.level(4), *g.labels);
  CHECK(after.anomaly_adjacent_edges < before.anomaly_adjacent_edges);
  CHECK(after.mean_homo_normal >= before.mean_homo_normal);
}

TEST_CASE("sequence validation", "[nsgt]") {
  TestRng rng(707);
  auto g = support::random_graph(rng, 6, 2, 6);
  CHECK_THROWS_AS(truncate_sequence(g, 0, 1), ValidationError);
  auto ts = truncate_sequence(g, 2, 1);
  CHECK_THROWS_AS(ts.level(0), ValidationError);
  CHECK_THROWS_AS(ts.level(3), ValidationError);
}
