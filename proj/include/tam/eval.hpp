#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "tam/common.hpp"

namespace tam {

// Ranking metrics for anomaly scores (higher score = more anomalous).
// Both are computed from exact tie-group counts, so equal inputs give
// bit-equal results regardless of how the scores were produced.

namespace detail {

inline void check_eval_input(const Vector& scores, const std::vector<int>& labels) {
  if (scores.size() != static_cast<Index>(labels.size()))
    throw ValidationError("eval: " + std::to_string(scores.size()) + " scores vs " +
                          std::to_string(labels.size()) + " labels");
  if (scores.size() == 0) throw ValidationError("eval: empty input");
  for (Index i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i]))
      throw ValidationError("eval: score " + std::to_string(i) + " is NaN");
    if (labels[static_cast<std::size_t>(i)] != 0 && labels[static_cast<std::size_t>(i)] != 1)
      throw ValidationError("eval: labels must be 0 or 1");
  }
}

}  // namespace detail

// Probability that a random anomaly outranks a random normal node, ties
// counting half (the Mann-Whitney statistic).
inline double auroc(const Vector& scores, const std::vector<int>& labels) {
  detail::check_eval_input(scores, labels);
  const Index n = scores.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return scores[a] < scores[b]; });

  double n_pos = 0, n_neg = 0;
  for (int y : labels) (y == 1 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0)
    throw ValidationError("auroc: need both classes present");

  double numerator = 0.0, neg_below = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double pos_in = 0, neg_in = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[static_cast<std::size_t>(order[j])] == 1 ? pos_in : neg_in) += 1;
      ++j;
    }
    numerator += pos_in * neg_below + 0.5 * pos_in * neg_in;
    neg_below += neg_in;
    i = j;
  }
  return numerator / (n_pos * n_neg);
}

// Average precision: mean over anomalies of the precision at their rank,
// with a tie group evaluated as a block at the group's final rank.
inline double auprc(const Vector& scores, const std::vector<int>& labels) {
  detail::check_eval_input(scores, labels);
  const Index n = scores.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  Index n_pos = 0;
  for (int y : labels) n_pos += y;
  if (n_pos == 0 || n_pos == n)
    throw ValidationError("auprc: need both classes present");

  double sum = 0.0;
  Index rank_end = 0, tp_end = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    Index pos_in = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      pos_in += labels[static_cast<std::size_t>(order[j])];
      ++j;
    }
    rank_end += static_cast<Index>(j - i);
    tp_end += pos_in;
    const double precision_at_end =
        static_cast<double>(tp_end) / static_cast<double>(rank_end);
    for (Index p = 0; p < pos_in; ++p) sum += precision_at_end;
    i = j;
  }
  return sum / static_cast<double>(n_pos);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct RunMetrics {
  double auroc = 0.0;
  double auprc = 0.0;
};

// One scored run plus optional anomaly-type tags (0 normal, 1 structural,
// 2 contextual), aligned with the labels.
struct EvalRun {
  Vector scores;
  std::vector<int> labels;
  std::optional<std::vector<int>> types;
};

struct TypedMetrics {
  RunMetrics overall;
  std::optional<RunMetrics> structural;
  std::optional<RunMetrics> contextual;
};

// Metrics for one anomaly type: its anomalies stay positive, every normal
// node stays negative, the other type's nodes are dropped entirely.
inline RunMetrics metrics_for_type(const Vector& scores, const std::vector<int>& labels,
                                   const std::vector<int>& types, int type) {
  if (types.size() != labels.size())
    throw ValidationError("eval: type tags do not match labels");
  std::vector<double> s;
  std::vector<int> y;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if ((types[i] != 0) != (labels[i] == 1))
      throw ValidationError("eval: type tags disagree with labels at node " +
                            std::to_string(i));
    if (labels[i] == 1 && types[i] != type) continue;
    s.push_back(scores[static_cast<Index>(i)]);
    y.push_back(labels[i]);
  }
  Vector sv = Eigen::Map<const Vector>(s.data(), static_cast<Index>(s.size()));
  return {auroc(sv, y), auprc(sv, y)};
}

inline TypedMetrics evaluate_run(const EvalRun& run) {
  TypedMetrics out;
  out.overall = {auroc(run.scores, run.labels), auprc(run.scores, run.labels)};
  if (run.types) {
    bool has_structural = std::count(run.types->begin(), run.types->end(), 1) > 0;
    bool has_contextual = std::count(run.types->begin(), run.types->end(), 2) > 0;
    if (has_structural)
      out.structural = metrics_for_type(run.scores, run.labels, *run.types, 1);
    if (has_contextual)
      out.contextual = metrics_for_type(run.scores, run.labels, *run.types, 2);
  }
  return out;
}

// mean and sample standard deviation (0 for a single run).
struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
};

inline Aggregate aggregate(const std::vector<double>& xs) {
  if (xs.empty()) throw ValidationError("aggregate: no values");
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double stddev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  return {mean, stddev};
}

struct EvalReport {
  std::vector<TypedMetrics> runs;
  Aggregate auroc;
  Aggregate auprc;
  std::optional<Aggregate> auroc_structural, auprc_structural;
  std::optional<Aggregate> auroc_contextual, auprc_contextual;
};

inline EvalReport evaluate_runs(const std::vector<EvalRun>& runs) {
  if (runs.empty()) throw ValidationError("evaluate_runs: no runs");
  EvalReport rep;
  std::vector<double> roc, prc, roc_s, prc_s, roc_c, prc_c;
  for (const EvalRun& r : runs) {
    TypedMetrics m = evaluate_run(r);
    roc.push_back(m.overall.auroc);
    prc.push_back(m.overall.auprc);
    if (m.structural) {
      roc_s.push_back(m.structural->auroc);
      prc_s.push_back(m.structural->auprc);
    }
    if (m.contextual) {
      roc_c.push_back(m.contextual->auroc);
      prc_c.push_back(m.contextual->auprc);
    }
    rep.runs.push_back(std::move(m));
  }
  rep.auroc = aggregate(roc);
  rep.auprc = aggregate(prc);
  if (roc_s.size() == runs.size()) {
    rep.auroc_structural = aggregate(roc_s);
    rep.auprc_structural = aggregate(prc_s);
  }
  if (roc_c.size() == runs.size()) {
    rep.auroc_contextual = aggregate(roc_c);
    rep.auprc_contextual = aggregate(prc_c);
  }
  return rep;
}

}  // namespace tam
