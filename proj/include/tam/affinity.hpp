#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tam/common.hpp"
#include "tam/graph.hpp"

namespace tam {

// Cosine similarity with the zero-vector convention sim(a, 0) := 0. That
// convention keeps the measure total (ReLU outputs can zero a row) and makes
// a dead embedding maximally non-affine rather than undefined.
inline double cosine_sim(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                         const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  if (a.size() != b.size())
    throw ValidationError("cosine_sim: length mismatch " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()));
  double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

// Node affinities h and their negation, the anomaly scores f = -h.
struct AffinityVector {
  Vector h;
  Vector anomaly_scores() const { return -h; }
};

// h_i = mean cosine similarity between row i and its neighbors' rows. The
// adjacency argument decides whose neighborhoods are averaged; callers that
// score learned representations still pass the original graph structure
// here. Nodes without neighbors get h_i = 0.
inline AffinityVector local_affinity(const Matrix& features, const CsrAdjacency& a) {
  if (features.rows() != a.n)
    throw ValidationError("local_affinity: feature rows do not match node count");
  // Normalize rows once; per-edge work is then a dot product.
  Matrix unit = features;
  for (NodeId i = 0; i < a.n; ++i) {
    double norm = unit.row(i).norm();
    if (norm == 0.0)
      unit.row(i).setZero();
    else
      unit.row(i) /= norm;
  }
  AffinityVector out;
  out.h = Vector::Zero(a.n);
  for (NodeId i = 0; i < a.n; ++i) {
    Index deg = a.degree(i);
    if (deg == 0) continue;
    double sum = 0.0;
    for (NodeId j : a.neighbors(i)) sum += unit.row(i).dot(unit.row(j));
    out.h[i] = sum / static_cast<double>(deg);
  }
  return out;
}

inline AffinityVector local_affinity(const AttributedGraph& g) {
  return local_affinity(g.attributes, g.adjacency);
}

// Scores plus a human-readable note on how each run was produced.
struct ScoreVector {
  Vector scores;
  std::string provenance;
};

}  // namespace tam
