#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tam/common.hpp"
#include "tam/graph.hpp"
#include "tam/rng.hpp"

namespace tam {

// Synthetic one-class-homophily benchmark: two Gaussian attribute clusters
// of normal nodes, dense intra-cluster wiring, plus a handful of anomalies
// whose attributes sit far out along a direction correlated with their home
// cluster. The correlation keeps raw cosine affinity uninformative (an
// anomaly looks about as aligned with its neighbors as a normal node does)
// while the Euclidean gap makes the anomalous edges stand out to a
// distance-based truncation.

struct BenchmarkConfig {
  NodeId nodes_per_cluster = 200;
  NodeId num_anomalies = 20;
  Index attr_dim = 16;
  Index intra_draws = 4;     // undirected edge draws per normal node
  Index anomaly_degree = 6;  // distinct normal neighbors per anomaly
  double cluster_norm = 12.0;
  double noise_sigma = 1.0;
  double anomaly_scale = 3.0;  // anomaly magnitude, relative to cluster_norm
  double anomaly_align = 0.8;  // pull toward the home cluster's direction
  std::uint64_t seed = 1;

  void validate() const {
    if (nodes_per_cluster < 2) throw ValidationError("benchmark: need >= 2 nodes per cluster");
    if (num_anomalies < 0) throw ValidationError("benchmark: negative anomaly count");
    if (attr_dim < 2) throw ValidationError("benchmark: need >= 2 attribute dims");
    if (intra_draws < 1) throw ValidationError("benchmark: need >= 1 intra-cluster draw");
    if (num_anomalies > 0 &&
        (anomaly_degree < 1 || anomaly_degree > nodes_per_cluster))
      throw ValidationError("benchmark: anomaly degree outside [1, nodes_per_cluster]");
    if (!(noise_sigma >= 0)) throw ValidationError("benchmark: negative noise");
    if (!(cluster_norm > 0) || !(anomaly_scale > 0))
      throw ValidationError("benchmark: scales must be positive");
    if (!(anomaly_align >= 0 && anomaly_align <= 1))
      throw ValidationError("benchmark: align must lie in [0,1]");
  }
};

namespace detail {

inline Eigen::RowVectorXd random_unit(Rng& rng, Index dim) {
  Eigen::RowVectorXd v(dim);
  double norm = 0.0;
  do {
    for (Index i = 0; i < dim; ++i) v[i] = rng.normal();
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

}  // namespace detail

// Nodes [0, C) and [C, 2C) are the two clusters, anomalies follow at the
// end, labeled 1. Cluster centers are orthogonal directions of equal norm.
inline AttributedGraph make_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  const NodeId c = cfg.nodes_per_cluster;
  const NodeId n = 2 * c + cfg.num_anomalies;

  Rng dir_rng(derive_seed(cfg.seed, "bench.dirs"));
  Eigen::RowVectorXd u0 = detail::random_unit(dir_rng, cfg.attr_dim);
  Eigen::RowVectorXd u1;
  do {
    u1 = detail::random_unit(dir_rng, cfg.attr_dim);
    u1 -= u1.dot(u0) * u0;
  } while (u1.norm() < 1e-9);
  u1 /= u1.norm();
  const Eigen::RowVectorXd centers[2] = {u0, u1};

  Matrix x(n, cfg.attr_dim);
  Rng attr_rng(derive_seed(cfg.seed, "bench.attrs"));
  for (NodeId i = 0; i < 2 * c; ++i) {
    const Eigen::RowVectorXd& u = centers[i < c ? 0 : 1];
    for (Index d = 0; d < cfg.attr_dim; ++d)
      x(i, d) = cfg.cluster_norm * u[d] + cfg.noise_sigma * attr_rng.normal();
  }
  Rng anom_rng(derive_seed(cfg.seed, "bench.anomalies"));
  for (NodeId a = 0; a < cfg.num_anomalies; ++a) {
    const Eigen::RowVectorXd& u = centers[a % 2];
    Eigen::RowVectorXd dir =
        cfg.anomaly_align * u + (1.0 - cfg.anomaly_align) * detail::random_unit(anom_rng, cfg.attr_dim);
    dir /= dir.norm();
    for (Index d = 0; d < cfg.attr_dim; ++d)
      x(2 * c + a, d) = cfg.anomaly_scale * cfg.cluster_norm * dir[d] +
                        cfg.noise_sigma * anom_rng.normal();
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  Rng edge_rng(derive_seed(cfg.seed, "bench.edges"));
  for (NodeId i = 0; i < 2 * c; ++i) {
    const NodeId base = i < c ? 0 : c;
    for (Index d = 0; d < cfg.intra_draws; ++d) {
      NodeId j;
      do {
        j = base + static_cast<NodeId>(edge_rng.bounded(static_cast<std::uint64_t>(c)));
      } while (j == i);
      edges.emplace_back(i, j);
    }
  }
  for (NodeId a = 0; a < cfg.num_anomalies; ++a) {
    const NodeId base = (a % 2 == 0) ? 0 : c;
    auto picks = edge_rng.sample_without_replacement(c, cfg.anomaly_degree);
    for (NodeId p : picks) edges.emplace_back(2 * c + a, base + p);
  }

  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (NodeId a = 0; a < cfg.num_anomalies; ++a)
    labels[static_cast<std::size_t>(2 * c + a)] = 1;

  return make_graph(std::move(x), std::move(edges), std::move(labels));
}

}  // namespace tam
