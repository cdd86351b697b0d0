#pragma once

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "tam/affinity.hpp"
#include "tam/common.hpp"
#include "tam/graph.hpp"
#include "tam/lamnet.hpp"
#include "tam/nsgt.hpp"
#include "tam/rng.hpp"

namespace tam {

// The full detector: T independent truncation runs, each yielding K nested
// adjacencies; one model per (t,k); the anomaly score is the mean of the
// T*K per-model scores. Every model draws its init from
// derive_seed(master, "lamnet", t, k), every truncation run from
// derive_seed(master, "nsgt", t), so results never depend on scheduling.

struct TamEnsemble {
  int t_count = 0;
  int k_count = 0;
  std::uint64_t master_seed = 0;
  TrainConfig base_config;
  std::vector<TruncationSet> truncations;  // size T
  std::vector<LamnetModel> models;         // size T*K, model (t,k) at t*K + k

  const LamnetModel& model(int t, int k) const {
    if (t < 0 || t >= t_count || k < 0 || k >= k_count)
      throw ValidationError("TamEnsemble::model: (t,k) out of range");
    return models[static_cast<std::size_t>(t) * static_cast<std::size_t>(k_count) +
                  static_cast<std::size_t>(k)];
  }
};

namespace detail {

// Runs fn(i) for i in [0,total) on up to jobs threads. Slot-indexed results
// make the outcome order-independent; the lowest-index failure wins.
template <typename Fn>
void parallel_for(Index total, int jobs, Fn&& fn) {
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
  if (jobs == 1) {
    for (Index i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(total));
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      while (true) {
        Index i = next.fetch_add(1);
        if (i >= total) break;
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Trains the (t,k) grid over per-run adjacency chains. When
// affinity_follows_chain is set, the objective's neighborhoods come from the
// chain level instead of the original graph (the truncated-affinity
// ablation).
inline std::vector<LamnetModel> train_grid(
    const AttributedGraph& g, const std::vector<std::vector<CsrAdjacency>>& chains,
    const TrainConfig& base, std::uint64_t master_seed, int jobs,
    bool affinity_follows_chain = false) {
  const int t_count = static_cast<int>(chains.size());
  const int k_count = t_count > 0 ? static_cast<int>(chains.front().size()) : 0;
  std::vector<LamnetModel> models(static_cast<std::size_t>(t_count) *
                                  static_cast<std::size_t>(k_count));
  parallel_for(static_cast<Index>(models.size()), jobs, [&](Index i) {
    const int t = static_cast<int>(i) / k_count;
    const int k = static_cast<int>(i) % k_count;
    const CsrAdjacency& level = chains[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
    TrainConfig cfg = base;
    cfg.seed = derive_seed(master_seed, "lamnet", static_cast<std::uint64_t>(t),
                           static_cast<std::uint64_t>(k));
    const CsrAdjacency& affinity = affinity_follows_chain ? level : g.adjacency;
    Objective obj(g.attributes, level, affinity, cfg.lambda, cfg.neg_sample_size,
                  derive_seed(cfg.seed, "sampling"));
    try {
      models[static_cast<std::size_t>(i)] = train_on_objective(obj, g, level, cfg);
    } catch (const TrainingError& e) {
      throw TrainingError("model (seed=" + std::to_string(master_seed) +
                              ", t=" + std::to_string(t) + ", k=" + std::to_string(k) +
                              "): " + e.what(),
                          e.epoch);
    }
  });
  return models;
}

inline Vector mean_of_scores(const std::vector<Vector>& runs) {
  Vector sum = Vector::Zero(runs.front().size());
  for (const Vector& s : runs) sum += s;
  return sum / static_cast<double>(runs.size());
}

}  // namespace detail

inline TamEnsemble train_tam(const AttributedGraph& g, int t_count, int k_count,
                             const TrainConfig& base, std::uint64_t master_seed,
                             int jobs = 1) {
  if (t_count < 1 || k_count < 1)
    throw ValidationError("train_tam: need T >= 1 and K >= 1");
  base.validate();
  TamEnsemble ens;
  ens.t_count = t_count;
  ens.k_count = k_count;
  ens.master_seed = master_seed;
  ens.base_config = base;
  std::vector<std::vector<CsrAdjacency>> chains;
  for (int t = 0; t < t_count; ++t) {
    ens.truncations.push_back(truncate_sequence(
        g, k_count, derive_seed(master_seed, "nsgt", static_cast<std::uint64_t>(t))));
    chains.push_back(ens.truncations.back().levels);
  }
  ens.models = detail::train_grid(g, chains, base, master_seed, jobs);
  return ens;
}

// Mean of the member scores; each member scores with its own message
// adjacency but affinity over the original neighborhoods.
inline ScoreVector score(const TamEnsemble& ens, const AttributedGraph& g) {
  if (ens.models.empty()) throw ValidationError("score: empty ensemble");
  std::vector<Vector> runs;
  runs.reserve(ens.models.size());
  for (const LamnetModel& m : ens.models) runs.push_back(score_single(m, g).scores);
  ScoreVector out;
  out.scores = detail::mean_of_scores(runs);
  out.provenance = "tam(T=" + std::to_string(ens.t_count) +
                   ",K=" + std::to_string(ens.k_count) +
                   ",seed=" + std::to_string(ens.master_seed) + ")";
  return out;
}

// ---------------------------------------------------------------------------
// Scoring variants (the detector's ablations)
// ---------------------------------------------------------------------------

enum class Variant {
  Tam,            // the full detector
  RawAffinity,    // negated attribute affinity, no training
  Degree,         // negated truncated degree, no training
  TamT,           // affinity measured over the truncated adjacency
  SingleScale,    // only depth `scale` models, averaged over T
  RawGraph,       // the T*K grid trained on the untruncated adjacency
  EdgeDrop,       // truncation replaced by uniform random edge removal
  SimilarityCut,  // truncation replaced by cutting the most distant edges
};

struct VariantSpec {
  Variant kind = Variant::Tam;
  int scale = 1;       // SingleScale: which depth k (1-based)
  double rate = 0.05;  // EdgeDrop / SimilarityCut: per-iteration removal share
};

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Tam: return "tam";
    case Variant::RawAffinity: return "raw-affinity";
    case Variant::Degree: return "degree";
    case Variant::TamT: return "tam-t";
    case Variant::SingleScale: return "single-scale";
    case Variant::RawGraph: return "raw-graph";
    case Variant::EdgeDrop: return "edge-drop";
    case Variant::SimilarityCut: return "similarity-cut";
  }
  throw ValidationError("to_string: unknown variant");
}

inline Variant parse_variant(const std::string& s) {
  for (Variant v : {Variant::Tam, Variant::RawAffinity, Variant::Degree,
                    Variant::TamT, Variant::SingleScale, Variant::RawGraph,
                    Variant::EdgeDrop, Variant::SimilarityCut})
    if (to_string(v) == s) return v;
  throw ValidationError("unknown variant '" + s + "'");
}

namespace detail {

// K nested levels from repeatedly deleting round(rate * m_current) edges,
// uniformly at random.
inline std::vector<CsrAdjacency> edge_drop_chain(const AttributedGraph& g, int k_count,
                                                 double rate, std::uint64_t seed) {
  std::vector<CsrAdjacency> levels;
  WeightedEdgeSet wes = WeightedEdgeSet::from_distances(edge_distances(g), g.num_nodes());
  for (int k = 1; k <= k_count; ++k) {
    auto n_remove = static_cast<Index>(std::llround(
        rate * static_cast<double>(wes.edges.size())));
    Rng rng(derive_seed(seed, "edgedrop", static_cast<std::uint64_t>(k)));
    auto doomed = rng.sample_without_replacement(static_cast<NodeId>(wes.edges.size()),
                                                 static_cast<NodeId>(n_remove));
    std::vector<char> drop(wes.edges.size(), 0);
    for (NodeId d : doomed) drop[static_cast<std::size_t>(d)] = 1;
    WeightedEdgeSet next;
    next.num_nodes = wes.num_nodes;
    for (std::size_t e = 0; e < wes.edges.size(); ++e)
      if (!drop[e]) {
        next.edges.push_back(wes.edges[e]);
        next.dist.push_back(wes.dist[e]);
        next.orig_id.push_back(wes.orig_id[e]);
      }
    wes = std::move(next);
    levels.push_back(build_adjacency(g.num_nodes(), wes.edges));
  }
  return levels;
}

// K nested levels from repeatedly deleting the round(rate * m_current) edges
// with the largest attribute distance; equal distances fall back to the
// smaller original edge id first.
inline std::vector<CsrAdjacency> similarity_cut_chain(const AttributedGraph& g,
                                                      int k_count, double rate) {
  std::vector<CsrAdjacency> levels;
  WeightedEdgeSet wes = WeightedEdgeSet::from_distances(edge_distances(g), g.num_nodes());
  for (int k = 1; k <= k_count; ++k) {
    auto n_remove = static_cast<std::size_t>(std::llround(
        rate * static_cast<double>(wes.edges.size())));
    std::vector<std::size_t> order(wes.edges.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (wes.dist[a] != wes.dist[b]) return wes.dist[a] > wes.dist[b];
      return wes.orig_id[a] < wes.orig_id[b];
    });
    std::vector<char> drop(wes.edges.size(), 0);
    for (std::size_t i = 0; i < n_remove && i < order.size(); ++i) drop[order[i]] = 1;
    WeightedEdgeSet next;
    next.num_nodes = wes.num_nodes;
    for (std::size_t e = 0; e < wes.edges.size(); ++e)
      if (!drop[e]) {
        next.edges.push_back(wes.edges[e]);
        next.dist.push_back(wes.dist[e]);
        next.orig_id.push_back(wes.orig_id[e]);
      }
    wes = std::move(next);
    levels.push_back(build_adjacency(g.num_nodes(), wes.edges));
  }
  return levels;
}

inline std::vector<std::vector<CsrAdjacency>> nsgt_chains(const AttributedGraph& g,
                                                          int t_count, int k_count,
                                                          std::uint64_t master_seed) {
  std::vector<std::vector<CsrAdjacency>> chains;
  for (int t = 0; t < t_count; ++t)
    chains.push_back(
        truncate_sequence(g, k_count,
                          derive_seed(master_seed, "nsgt", static_cast<std::uint64_t>(t)))
            .levels);
  return chains;
}

}  // namespace detail

// Scores the graph with one named variant under the same T/K/seed budget as
// the full detector. Model seeds depend only on (master_seed, t, k), so
// variants differing purely in their adjacency chains stay comparable, and
// EdgeDrop at rate 0 reproduces RawGraph bit for bit.
inline ScoreVector score_variant(const AttributedGraph& g, const VariantSpec& spec,
                                 int t_count, int k_count, const TrainConfig& base,
                                 std::uint64_t master_seed, int jobs = 1) {
  if (t_count < 1 || k_count < 1)
    throw ValidationError("score_variant: need T >= 1 and K >= 1");
  ScoreVector out;
  const std::string budget = "(T=" + std::to_string(t_count) +
                             ",K=" + std::to_string(k_count) +
                             ",seed=" + std::to_string(master_seed) + ")";
  switch (spec.kind) {
    case Variant::Tam:
      return score(train_tam(g, t_count, k_count, base, master_seed, jobs), g);

    case Variant::RawAffinity: {
      out.scores = -local_affinity(g).h;
      out.provenance = "raw-affinity";
      return out;
    }

    case Variant::Degree: {
      auto chains = detail::nsgt_chains(g, t_count, k_count, master_seed);
      std::vector<Vector> runs;
      for (const auto& chain : chains)
        for (const CsrAdjacency& level : chain) {
          Vector s(g.num_nodes());
          for (NodeId i = 0; i < g.num_nodes(); ++i)
            s[i] = -static_cast<double>(level.degree(i));
          runs.push_back(std::move(s));
        }
      out.scores = detail::mean_of_scores(runs);
      out.provenance = "degree" + budget;
      return out;
    }

    case Variant::TamT: {
      auto chains = detail::nsgt_chains(g, t_count, k_count, master_seed);
      auto models = detail::train_grid(g, chains, base, master_seed, jobs,
                                       /*affinity_follows_chain=*/true);
      std::vector<Vector> runs;
      for (const LamnetModel& m : models) {
        Matrix h = forward(m.params, g, m.trunc);
        runs.push_back(-local_affinity(h, m.trunc).h);
      }
      out.scores = detail::mean_of_scores(runs);
      out.provenance = "tam-t" + budget;
      return out;
    }

    case Variant::SingleScale: {
      if (spec.scale < 1 || spec.scale > k_count)
        throw ValidationError("single-scale: scale outside [1,K]");
      auto chains = detail::nsgt_chains(g, t_count, k_count, master_seed);
      // Same derived seeds as the full grid's (t, scale-1) models.
      std::vector<LamnetModel> models(static_cast<std::size_t>(t_count));
      detail::parallel_for(t_count, jobs, [&](Index t) {
        TrainConfig cfg = base;
        cfg.seed = derive_seed(master_seed, "lamnet", static_cast<std::uint64_t>(t),
                               static_cast<std::uint64_t>(spec.scale - 1));
        models[static_cast<std::size_t>(t)] =
            train(g, chains[static_cast<std::size_t>(t)][static_cast<std::size_t>(spec.scale - 1)],
                  cfg);
      });
      std::vector<Vector> runs;
      for (const LamnetModel& m : models) runs.push_back(score_single(m, g).scores);
      out.scores = detail::mean_of_scores(runs);
      out.provenance = "single-scale(k=" + std::to_string(spec.scale) + ")" + budget;
      return out;
    }

    case Variant::RawGraph: {
      std::vector<std::vector<CsrAdjacency>> chains(
          static_cast<std::size_t>(t_count),
          std::vector<CsrAdjacency>(static_cast<std::size_t>(k_count), g.adjacency));
      auto models = detail::train_grid(g, chains, base, master_seed, jobs);
      std::vector<Vector> runs;
      for (const LamnetModel& m : models) runs.push_back(score_single(m, g).scores);
      out.scores = detail::mean_of_scores(runs);
      out.provenance = "raw-graph" + budget;
      return out;
    }

    case Variant::EdgeDrop:
    case Variant::SimilarityCut: {
      if (!(spec.rate >= 0.0 && spec.rate < 1.0))
        throw ValidationError("variant rate must lie in [0,1)");
      std::vector<std::vector<CsrAdjacency>> chains;
      for (int t = 0; t < t_count; ++t) {
        if (spec.kind == Variant::EdgeDrop)
          chains.push_back(detail::edge_drop_chain(
              g, k_count, spec.rate,
              derive_seed(master_seed, "edgedrop.run", static_cast<std::uint64_t>(t))));
        else
          chains.push_back(detail::similarity_cut_chain(g, k_count, spec.rate));
      }
      auto models = detail::train_grid(g, chains, base, master_seed, jobs);
      std::vector<Vector> runs;
      for (const LamnetModel& m : models) runs.push_back(score_single(m, g).scores);
      out.scores = detail::mean_of_scores(runs);
      out.provenance = to_string(spec.kind) + "(rate=" + std::to_string(spec.rate) + ")" + budget;
      return out;
    }
  }
  throw ValidationError("score_variant: unknown variant");
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline void save_ensemble(const TamEnsemble& ens, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir);

  nlohmann::json manifest;
  manifest["format"] = "tam.ensemble";
  manifest["version"] = 1;
  manifest["T"] = ens.t_count;
  manifest["K"] = ens.k_count;
  manifest["master_seed"] = ens.master_seed;
  manifest["config"] = detail::config_to_json(ens.base_config);
  manifest["config_hash"] = fnv1a64(detail::config_to_json(ens.base_config).dump());
  nlohmann::json files = nlohmann::json::array();
  for (int t = 0; t < ens.t_count; ++t)
    for (int k = 0; k < ens.k_count; ++k) {
      std::string name = "model_t" + std::to_string(t) + "_k" + std::to_string(k) + ".json";
      save_model(ens.model(t, k), (fs::path(dir) / name).string());
      files.push_back(name);
    }
  manifest["models"] = std::move(files);
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot write manifest in " + dir);
  out << manifest.dump(1) << '\n';
  if (!out) throw IoError("write failure on manifest in " + dir);
}

// Rebuilds the ensemble from disk. Truncation levels are recovered from the
// stored per-model adjacencies; which iteration removed an edge is not
// persisted, so removed_at stays empty.
inline TamEnsemble load_ensemble(const std::string& dir) {
  namespace fs = std::filesystem;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(
        detail::read_text_file((fs::path(dir) / "manifest.json").string()));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(dir + "/manifest.json: " + e.what());
  }
  TamEnsemble ens;
  try {
    if (manifest.at("format").get<std::string>() != "tam.ensemble")
      throw ParseError(dir + ": not an ensemble directory");
    ens.t_count = manifest.at("T").get<int>();
    ens.k_count = manifest.at("K").get<int>();
    ens.master_seed = manifest.at("master_seed").get<std::uint64_t>();
    ens.base_config = detail::config_from_json(manifest.at("config"));
    for (const auto& name : manifest.at("models"))
      ens.models.push_back(load_model((fs::path(dir) / name.get<std::string>()).string()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(dir + "/manifest.json: " + e.what());
  }
  if (static_cast<int>(ens.models.size()) != ens.t_count * ens.k_count)
    throw ParseError(dir + ": manifest lists " + std::to_string(ens.models.size()) +
                     " models, expected " + std::to_string(ens.t_count * ens.k_count));
  for (int t = 0; t < ens.t_count; ++t) {
    TruncationSet ts;
    ts.seed = derive_seed(ens.master_seed, "nsgt", static_cast<std::uint64_t>(t));
    for (int k = 0; k < ens.k_count; ++k)
      ts.levels.push_back(ens.model(t, k).trunc);
    ts.num_nodes = ts.levels.front().n;
    ens.truncations.push_back(std::move(ts));
  }
  return ens;
}

}  // namespace tam
