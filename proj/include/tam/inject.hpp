#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tam/common.hpp"
#include "tam/graph.hpp"
#include "tam/rng.hpp"

namespace tam {

// Anomaly injection for clean attributed graphs: structural anomalies are
// planted cliques, contextual anomalies get their attributes swapped with a
// far-away node's. Every modified node is labeled 1; nobody else's label
// moves.

struct InjectionConfig {
  Index clique_size = 15;     // q, nodes per planted clique
  Index num_cliques = 0;      // p
  Index num_contextual = 0;
  Index candidate_pool = 50;  // k, candidates per contextual swap
  std::uint64_t seed = 0;

  void validate(NodeId n) const {
    if (num_cliques < 0 || num_contextual < 0)
      throw ValidationError("injection: counts must be non-negative");
    if (num_cliques > 0 && clique_size < 2)
      throw ValidationError("injection: clique size must be at least 2");
    if (num_contextual > 0 && candidate_pool < 1)
      throw ValidationError("injection: candidate pool must be at least 1");
    if (clique_size * num_cliques + num_contextual >= n)
      throw ValidationError("injection: " +
                            std::to_string(clique_size * num_cliques + num_contextual) +
                            " anomalies leave no normal nodes among " +
                            std::to_string(n));
  }
};

namespace detail {

inline std::vector<int> labels_or_zeros(const AttributedGraph& g) {
  if (g.labels) return *g.labels;
  return std::vector<int>(static_cast<std::size_t>(g.num_nodes()), 0);
}

inline std::vector<NodeId> unlabeled_nodes(const std::vector<int>& labels) {
  std::vector<NodeId> ids;
  for (NodeId i = 0; i < static_cast<NodeId>(labels.size()); ++i)
    if (labels[static_cast<std::size_t>(i)] == 0) ids.push_back(i);
  return ids;
}

}  // namespace detail

struct StructuralInjection {
  AttributedGraph graph;
  std::vector<std::vector<NodeId>> cliques;
};

// Plants num_cliques fully connected groups of clique_size nodes, sampled
// without replacement from the label-0 population. Attributes untouched.
inline StructuralInjection inject_structural(const AttributedGraph& g,
                                             const InjectionConfig& cfg) {
  cfg.validate(g.num_nodes());
  std::vector<int> labels = detail::labels_or_zeros(g);
  auto pool = detail::unlabeled_nodes(labels);
  const Index need = cfg.clique_size * cfg.num_cliques;
  if (need > static_cast<Index>(pool.size()))
    throw ValidationError("inject_structural: need " + std::to_string(need) +
                          " unlabeled nodes, have " + std::to_string(pool.size()));

  Rng rng(derive_seed(cfg.seed, "inject.structural"));
  auto picks = rng.sample_without_replacement(static_cast<NodeId>(pool.size()), need);

  StructuralInjection out;
  auto edges = g.adjacency.undirected_edges();
  for (Index c = 0; c < cfg.num_cliques; ++c) {
    std::vector<NodeId> clique;
    for (Index s = 0; s < cfg.clique_size; ++s)
      clique.push_back(pool[static_cast<std::size_t>(picks[static_cast<std::size_t>(c * cfg.clique_size + s)])]);
    for (std::size_t i = 0; i < clique.size(); ++i)
      for (std::size_t j = i + 1; j < clique.size(); ++j)
        edges.emplace_back(clique[i], clique[j]);
    for (NodeId v : clique) labels[static_cast<std::size_t>(v)] = 1;
    out.cliques.push_back(std::move(clique));
  }
  out.graph.attributes = g.attributes;
  out.graph.adjacency = build_adjacency(g.num_nodes(), std::move(edges));
  out.graph.labels = std::move(labels);
  return out;
}

struct ContextualInjection {
  AttributedGraph graph;
  std::vector<NodeId> targets;
  std::vector<std::vector<NodeId>> pools;  // candidate draws, per target
  std::vector<NodeId> sources;             // the chosen max-distance candidate
};

// For each target: draw candidate_pool label-0 nodes (targets excluded),
// copy in the attributes of the candidate farthest in Euclidean distance.
// All distances and copied rows refer to the pre-injection attributes, so
// the outcome does not depend on target processing order.
inline ContextualInjection inject_contextual(const AttributedGraph& g,
                                             const InjectionConfig& cfg) {
  cfg.validate(g.num_nodes());
  std::vector<int> labels = detail::labels_or_zeros(g);
  auto pool = detail::unlabeled_nodes(labels);
  if (cfg.num_contextual > static_cast<Index>(pool.size()))
    throw ValidationError("inject_contextual: need " + std::to_string(cfg.num_contextual) +
                          " unlabeled nodes, have " + std::to_string(pool.size()));

  Rng rng(derive_seed(cfg.seed, "inject.contextual"));
  auto target_picks =
      rng.sample_without_replacement(static_cast<NodeId>(pool.size()), cfg.num_contextual);

  ContextualInjection out;
  for (NodeId p : target_picks) out.targets.push_back(pool[static_cast<std::size_t>(p)]);

  std::vector<char> is_target(static_cast<std::size_t>(g.num_nodes()), 0);
  for (NodeId t : out.targets) is_target[static_cast<std::size_t>(t)] = 1;
  std::vector<NodeId> candidates;
  for (NodeId v : pool)
    if (!is_target[static_cast<std::size_t>(v)]) candidates.push_back(v);
  if (cfg.num_contextual > 0 && cfg.candidate_pool > static_cast<Index>(candidates.size()))
    throw ValidationError("inject_contextual: candidate pool " +
                          std::to_string(cfg.candidate_pool) + " exceeds the " +
                          std::to_string(candidates.size()) + " available normal nodes");

  out.graph.attributes = g.attributes;
  for (NodeId t : out.targets) {
    auto draw = rng.sample_without_replacement(static_cast<NodeId>(candidates.size()),
                                               cfg.candidate_pool);
    std::vector<NodeId> drawn;
    for (NodeId d : draw) drawn.push_back(candidates[static_cast<std::size_t>(d)]);
    // Farthest candidate wins; among equals, the earliest draw.
    NodeId best = drawn.front();
    double best_dist = -1.0;
    for (NodeId c : drawn) {
      double d = (g.attributes.row(t) - g.attributes.row(c)).norm();
      if (d > best_dist) {
        best_dist = d;
        best = c;
      }
    }
    out.graph.attributes.row(t) = g.attributes.row(best);
    labels[static_cast<std::size_t>(t)] = 1;
    out.pools.push_back(std::move(drawn));
    out.sources.push_back(best);
  }
  out.graph.adjacency = g.adjacency;
  out.graph.labels = std::move(labels);
  return out;
}

struct CamouflageResult {
  AttributedGraph graph;
  std::vector<NodeId> anomalies;
  std::vector<std::vector<Index>> replaced;  // coordinate mask, per anomaly
};

// Makes anomalies blend in: each label-1 node gets round(fraction * M) of
// its coordinates (chosen per node, without replacement) overwritten with
// the mean attribute vector of the label-0 population. Structure untouched.
inline CamouflageResult camouflage(const AttributedGraph& g, double fraction,
                                   std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw ValidationError("camouflage: fraction must lie in [0,1]");
  if (!g.labels) throw ValidationError("camouflage: graph has no labels");

  CamouflageResult out;
  for (NodeId i = 0; i < g.num_nodes(); ++i)
    if ((*g.labels)[static_cast<std::size_t>(i)] == 1) out.anomalies.push_back(i);
  if (out.anomalies.empty())
    throw ValidationError("camouflage: no labeled anomalies to camouflage");

  const Index m = g.num_attributes();
  Eigen::RowVectorXd normal_mean = Eigen::RowVectorXd::Zero(m);
  Index normal_count = 0;
  for (NodeId i = 0; i < g.num_nodes(); ++i)
    if ((*g.labels)[static_cast<std::size_t>(i)] == 0) {
      normal_mean += g.attributes.row(i);
      ++normal_count;
    }
  if (normal_count == 0)
    throw ValidationError("camouflage: no normal nodes to average");
  normal_mean /= static_cast<double>(normal_count);

  const Index count = static_cast<Index>(std::llround(fraction * static_cast<double>(m)));
  out.graph = g;
  for (NodeId a : out.anomalies) {
    Rng rng(derive_seed(seed, "camouflage", static_cast<std::uint64_t>(a)));
    auto coords = rng.sample_without_replacement(m, count);
    for (NodeId c : coords) out.graph.attributes(a, c) = normal_mean[c];
    out.replaced.emplace_back(coords.begin(), coords.end());
  }
  return out;
}

}  // namespace tam
