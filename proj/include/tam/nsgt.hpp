#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tam/common.hpp"
#include "tam/graph.hpp"
#include "tam/rng.hpp"

namespace tam {

// Normal-structure-preserving graph truncation. Each iteration draws one
// radius per node, r_v uniform on [d_mean, d_{v,max}), and deletes an edge
// only when its distance exceeds the radius at both endpoints. Long
// (attribute-distant) edges die fast, short ones are never touched, and the
// surviving edge sets are nested across iterations.

// Marginal probability that a single endpoint flags an edge of distance d:
//   0 when the node's max distance does not exceed the mean,
//   max(d - d_mean, 0) / (d_max - d_mean) otherwise.
// Requires d <= d_max (an edge's distance never exceeds its endpoint's max).
inline double endpoint_flag_probability(double d, double d_mean, double d_max) {
  if (d_max <= d_mean) return 0.0;
  double p = (d - d_mean) / (d_max - d_mean);
  return p < 0.0 ? 0.0 : p;
}

// Both endpoints must flag independently, so the marginals multiply. This is
// the closed form the sampled truncation is tested against.
inline double removal_probability(double d, double d_mean, double d_i_max,
                                  double d_j_max) {
  return endpoint_flag_probability(d, d_mean, d_i_max) *
         endpoint_flag_probability(d, d_mean, d_j_max);
}

// A mutable edge subset with per-edge distances. orig_id tracks each edge's
// position in the starting canonical enumeration so removals can be
// attributed and ties broken stably across iterations.
struct WeightedEdgeSet {
  NodeId num_nodes = 0;
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<double> dist;
  std::vector<std::size_t> orig_id;

  static WeightedEdgeSet from_distances(const EdgeDistanceMap& m, NodeId n) {
    WeightedEdgeSet s;
    s.num_nodes = n;
    s.edges = m.edges;
    s.dist = m.dist;
    s.orig_id.resize(m.edges.size());
    for (std::size_t e = 0; e < s.orig_id.size(); ++e) s.orig_id[e] = e;
    return s;
  }

  double mean_dist() const {
    if (edges.empty()) return 0.0;
    double sum = 0.0;
    for (double d : dist) sum += d;
    return sum / static_cast<double>(edges.size());
  }

  // Max incident distance per node; -inf for nodes with no current edge.
  std::vector<double> node_max() const {
    std::vector<double> mx(static_cast<std::size_t>(num_nodes),
                           -std::numeric_limits<double>::infinity());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto [u, v] = edges[e];
      mx[static_cast<std::size_t>(u)] = std::max(mx[static_cast<std::size_t>(u)], dist[e]);
      mx[static_cast<std::size_t>(v)] = std::max(mx[static_cast<std::size_t>(v)], dist[e]);
    }
    return mx;
  }
};

struct TruncationStep {
  WeightedEdgeSet remaining;
  std::vector<std::size_t> removed;  // positions into the input edge list
};

// One truncation iteration. The mean and per-node maxima are recomputed from
// the current edge set; every eligible node draws exactly one radius from
// its own derived stream, so the result is independent of evaluation order.
// An edge at distance exactly r_v is kept (strict comparison).
inline TruncationStep truncate_once(const WeightedEdgeSet& es, std::uint64_t seed,
                                    Index iteration) {
  TruncationStep out;
  out.remaining.num_nodes = es.num_nodes;
  if (es.edges.empty()) return out;

  const double d_mean = es.mean_dist();
  const std::vector<double> mx = es.node_max();
  std::vector<double> radius(static_cast<std::size_t>(es.num_nodes),
                             std::numeric_limits<double>::infinity());
  for (NodeId v = 0; v < es.num_nodes; ++v) {
    if (mx[static_cast<std::size_t>(v)] > d_mean) {
      Rng rng(derive_seed(seed, "nsgt.radius", static_cast<std::uint64_t>(iteration),
                          static_cast<std::uint64_t>(v)));
      radius[static_cast<std::size_t>(v)] =
          rng.uniform(d_mean, mx[static_cast<std::size_t>(v)]);
    }
  }
  for (std::size_t e = 0; e < es.edges.size(); ++e) {
    auto [u, v] = es.edges[e];
    bool drop = es.dist[e] > radius[static_cast<std::size_t>(u)] &&
                es.dist[e] > radius[static_cast<std::size_t>(v)];
    if (drop) {
      out.removed.push_back(e);
    } else {
      out.remaining.edges.push_back(es.edges[e]);
      out.remaining.dist.push_back(es.dist[e]);
      out.remaining.orig_id.push_back(es.orig_id[e]);
    }
  }
  return out;
}

// The K nested adjacencies one anonymous run of the truncation produces.
// levels[k-1] holds the graph after k iterations; removed_at records, per
// original edge id, the iteration that deleted it (0 = survived all K).
struct TruncationSet {
  std::uint64_t seed = 0;
  NodeId num_nodes = 0;
  std::vector<CsrAdjacency> levels;
  std::vector<int> removed_at;

  int depth() const { return static_cast<int>(levels.size()); }

  const CsrAdjacency& level(int k) const {
    if (k < 1 || k > depth())
      throw ValidationError("TruncationSet::level: k=" + std::to_string(k) +
                            " outside [1," + std::to_string(depth()) + "]");
    return levels[static_cast<std::size_t>(k - 1)];
  }
};

// Runs K truncation iterations. Distances are computed once, from the raw
// attributes over the original edges; only the edge set shrinks.
inline TruncationSet truncate_sequence(const AttributedGraph& g, int K,
                                       std::uint64_t seed) {
  if (K < 1) throw ValidationError("truncate_sequence: need K >= 1");
  TruncationSet out;
  out.seed = seed;
  out.num_nodes = g.num_nodes();
  EdgeDistanceMap dm = edge_distances(g);
  out.removed_at.assign(dm.edges.size(), 0);
  WeightedEdgeSet wes = WeightedEdgeSet::from_distances(dm, g.num_nodes());
  for (int k = 1; k <= K; ++k) {
    TruncationStep step = truncate_once(wes, seed, k);
    for (std::size_t pos : step.removed)
      out.removed_at[wes.orig_id[pos]] = k;
    wes = std::move(step.remaining);
    out.levels.push_back(build_adjacency(g.num_nodes(), wes.edges));
  }
  return out;
}

}  // namespace tam
