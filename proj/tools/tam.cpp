// Command-line surface for the truncated affinity maximization pipeline.
// Subcommands: inject, stats, truncate, run, eval, bench. Every file this
// tool writes is deterministic in its inputs and --seed; wall-clock values
// only ever land in timing.csv.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tam/tam.hpp"

namespace fs = std::filesystem;
using namespace tam;

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish_out(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failure on " + path.string());
}

// ---------------------------------------------------------------------------
// Dataset loading shared by stats/truncate/run
// ---------------------------------------------------------------------------

struct Dataset {
  AttributedGraph g;
  LoadStats stats;
  std::optional<std::vector<int>> types;  // compacted, aligned with g
};

Dataset load_dataset(const std::string& edges, const std::string& attrs,
                     const std::string& labels, const std::string& types) {
  std::optional<std::string> lp;
  if (!labels.empty()) lp = labels;
  auto lg = load_graph(edges, attrs, lp);
  Dataset d{std::move(lg.graph), std::move(lg.stats), std::nullopt};
  if (!types.empty()) {
    auto raw = read_type_file(types);
    if (raw.size() != d.stats.old_to_new.size())
      throw ParseError(types + ": " + std::to_string(raw.size()) + " type tags for " +
                       std::to_string(d.stats.old_to_new.size()) + " attribute rows");
    std::vector<int> mapped(static_cast<std::size_t>(d.g.num_nodes()));
    for (NodeId i = 0; i < d.g.num_nodes(); ++i)
      mapped[static_cast<std::size_t>(i)] =
          raw[static_cast<std::size_t>(d.stats.new_to_old[static_cast<std::size_t>(i)])];
    d.types = std::move(mapped);
  }
  return d;
}

// ---------------------------------------------------------------------------
// CSV writers
// ---------------------------------------------------------------------------

// Scores are keyed by the ids of the input files, not the compacted ones.
void write_scores_csv(const fs::path& path, const Vector& scores,
                      const std::vector<NodeId>& new_to_old) {
  auto out = open_out(path);
  out << "node_id,score\n";
  for (Index i = 0; i < scores.size(); ++i)
    out << new_to_old[static_cast<std::size_t>(i)] << ',' << detail::format_double(scores[i]) << '\n';
  finish_out(out, path);
}

void write_truncation_stats(const fs::path& path, const AttributedGraph& g,
                            const std::vector<std::vector<CsrAdjacency>>& chains) {
  auto out = open_out(path);
  out << "k,edges_remaining,mean_homophily_normal,na_edges_remaining\n";
  const std::size_t depth = chains.empty() ? 0 : chains.front().size();
  for (std::size_t k = 0; k <= depth; ++k) {
    double edges = 0.0, homo = 0.0, na = 0.0;
    const double t_count = static_cast<double>(chains.size());
    for (const auto& chain : chains) {
      const CsrAdjacency& level = k == 0 ? g.adjacency : chain[k - 1];
      edges += static_cast<double>(level.num_edges());
      if (g.labels) {
        auto hs = homophily_stats(level, *g.labels);
        homo += hs.mean_homo_normal;
        na += static_cast<double>(hs.anomaly_adjacent_edges);
      }
    }
    edges /= t_count;
    out << k << ',' << detail::format_double(edges) << ',';
    if (g.labels)
      out << detail::format_double(homo / t_count) << ',' << detail::format_double(na / t_count) << '\n';
    else
      out << "nan,nan\n";
  }
  finish_out(out, path);
}

void append_metric_rows(std::ofstream& out, const std::string& name,
                        const std::vector<double>& values, const Aggregate& agg) {
  for (std::size_t r = 0; r < values.size(); ++r)
    out << name << ',' << (r + 1) << ',' << detail::format_double(values[r]) << '\n';
  out << name << ",mean," << detail::format_double(agg.mean) << '\n';
  out << name << ",std," << detail::format_double(agg.stddev) << '\n';
}

void write_report_csv(const fs::path& path, const EvalReport& rep) {
  auto out = open_out(path);
  out << "metric,run,value\n";
  auto column = [&](auto pick) {
    std::vector<double> v;
    for (const auto& run : rep.runs) v.push_back(pick(run));
    return v;
  };
  append_metric_rows(out, "auroc", column([](const TypedMetrics& m) { return m.overall.auroc; }),
                     rep.auroc);
  append_metric_rows(out, "auprc", column([](const TypedMetrics& m) { return m.overall.auprc; }),
                     rep.auprc);
  if (rep.auroc_structural) {
    append_metric_rows(out, "auroc_structural",
                       column([](const TypedMetrics& m) { return m.structural->auroc; }),
                       *rep.auroc_structural);
    append_metric_rows(out, "auprc_structural",
                       column([](const TypedMetrics& m) { return m.structural->auprc; }),
                       *rep.auprc_structural);
  }
  if (rep.auroc_contextual) {
    append_metric_rows(out, "auroc_contextual",
                       column([](const TypedMetrics& m) { return m.contextual->auroc; }),
                       *rep.auroc_contextual);
    append_metric_rows(out, "auprc_contextual",
                       column([](const TypedMetrics& m) { return m.contextual->auprc; }),
                       *rep.auprc_contextual);
  }
  finish_out(out, path);
}

void print_report(const EvalReport& rep, const std::vector<std::uint64_t>& seeds) {
  for (std::size_t r = 0; r < rep.runs.size(); ++r) {
    std::cout << "run " << (r + 1);
    if (r < seeds.size()) std::cout << " (seed " << seeds[r] << ")";
    std::cout << ": auroc=" << detail::format_double(rep.runs[r].overall.auroc)
              << " auprc=" << detail::format_double(rep.runs[r].overall.auprc);
    if (rep.runs[r].structural)
      std::cout << " auroc_structural=" << detail::format_double(rep.runs[r].structural->auroc);
    if (rep.runs[r].contextual)
      std::cout << " auroc_contextual=" << detail::format_double(rep.runs[r].contextual->auroc);
    std::cout << '\n';
  }
  std::cout << "auroc " << detail::format_double(rep.auroc.mean) << " +- "
            << detail::format_double(rep.auroc.stddev) << '\n';
  std::cout << "auprc " << detail::format_double(rep.auprc.mean) << " +- "
            << detail::format_double(rep.auprc.stddev) << '\n';
}

// ---------------------------------------------------------------------------
// inject
// ---------------------------------------------------------------------------

struct InjectOptions {
  std::string edges, attrs, labels;
  std::string structural;  // "PxQ": P cliques of Q nodes
  Index contextual = 0;
  Index pool = 50;
  double camouflage_fraction = 0.0;
  std::uint64_t seed = 1;
  std::string out = "injected";
};

std::pair<Index, Index> parse_structural(const std::string& s) {
  auto x = s.find('x');
  if (x == std::string::npos || x == 0 || x + 1 == s.size())
    throw ValidationError("--structural expects PxQ, e.g. 2x15, got '" + s + "'");
  Index p = detail::parse_int(std::string_view(s).substr(0, x), "--structural");
  Index q = detail::parse_int(std::string_view(s).substr(x + 1), "--structural");
  return {p, q};
}

void cmd_inject(const InjectOptions& o) {
  Dataset d = load_dataset(o.edges, o.attrs, o.labels, "");
  std::vector<int> types(static_cast<std::size_t>(d.g.num_nodes()), 0);
  if (d.g.labels)
    for (NodeId i = 0; i < d.g.num_nodes(); ++i)
      if ((*d.g.labels)[static_cast<std::size_t>(i)] == 1)
        types[static_cast<std::size_t>(i)] = 1;

  InjectionConfig cfg;
  cfg.num_contextual = o.contextual;
  cfg.candidate_pool = o.pool;
  cfg.seed = o.seed;
  if (!o.structural.empty()) {
    auto [p, q] = parse_structural(o.structural);
    cfg.num_cliques = p;
    cfg.clique_size = q;
  }

  AttributedGraph g = std::move(d.g);
  if (cfg.num_cliques > 0) {
    auto res = inject_structural(g, cfg);
    g = std::move(res.graph);
    for (const auto& clique : res.cliques)
      for (NodeId v : clique) types[static_cast<std::size_t>(v)] = 1;
  }
  if (cfg.num_contextual > 0) {
    auto res = inject_contextual(g, cfg);
    g = std::move(res.graph);
    for (NodeId t : res.targets) types[static_cast<std::size_t>(t)] = 2;
  }
  if (o.camouflage_fraction > 0.0) g = camouflage(g, o.camouflage_fraction, o.seed).graph;

  if (!g.labels) g.labels = std::vector<int>(static_cast<std::size_t>(g.num_nodes()), 0);
  write_edge_list(o.out + ".edges", g.adjacency);
  write_attribute_csv(o.out + ".attrs.csv", g.attributes);
  write_int_column(o.out + ".labels", *g.labels);
  write_int_column(o.out + ".types", types);

  Index anomalies = std::count(g.labels->begin(), g.labels->end(), 1);
  std::cout << "nodes=" << g.num_nodes() << " edges=" << g.adjacency.num_edges()
            << " anomalies=" << anomalies << '\n';
  std::cout << "wrote " << o.out << ".edges/.attrs.csv/.labels/.types\n";
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

struct StatsOptions {
  std::string edges, attrs, labels, types;
};

void cmd_stats(const StatsOptions& o) {
  Dataset d = load_dataset(o.edges, o.attrs, o.labels, o.types);
  const AttributedGraph& g = d.g;
  std::cout << "nodes=" << g.num_nodes() << '\n';
  std::cout << "edges=" << g.adjacency.num_edges() << '\n';
  std::cout << "attr_dim=" << g.num_attributes() << '\n';
  std::cout << "mean_degree="
            << detail::format_double(2.0 * static_cast<double>(g.adjacency.num_edges()) /
                             static_cast<double>(g.num_nodes()))
            << '\n';
  std::cout << "self_loops_dropped=" << d.stats.self_loops_dropped << '\n';
  std::cout << "duplicate_edges_dropped=" << d.stats.duplicate_edges_dropped << '\n';
  std::cout << "isolated_nodes_removed=" << d.stats.isolated_nodes_removed << '\n';
  std::cout << "mean_edge_distance=" << detail::format_double(edge_distances(g).mean) << '\n';
  if (g.labels) {
    auto hs = homophily_stats(g);
    std::cout << "anomalies=" << std::count(g.labels->begin(), g.labels->end(), 1) << '\n';
    std::cout << "mean_homophily_normal=" << detail::format_double(hs.mean_homo_normal) << '\n';
    std::cout << "mean_homophily_anomaly=" << detail::format_double(hs.mean_homo_anomaly) << '\n';
    std::cout << "anomaly_adjacent_edges=" << hs.anomaly_adjacent_edges << '\n';
  }
  if (d.types) {
    std::cout << "structural=" << std::count(d.types->begin(), d.types->end(), 1) << '\n';
    std::cout << "contextual=" << std::count(d.types->begin(), d.types->end(), 2) << '\n';
  }
}

// ---------------------------------------------------------------------------
// truncate
// ---------------------------------------------------------------------------

struct TruncateOptions {
  std::string edges, attrs, labels;
  int k = 4;
  int runs = 1;
  std::uint64_t seed = 1;
  std::string out = "truncation_stats.csv";
  std::string dump_prefix;  // when set, the first run's levels land on disk
};

void cmd_truncate(const TruncateOptions& o) {
  if (o.runs < 1) throw ValidationError("--runs must be positive");
  Dataset d = load_dataset(o.edges, o.attrs, o.labels, "");
  std::vector<std::vector<CsrAdjacency>> chains;
  for (int t = 0; t < o.runs; ++t)
    chains.push_back(
        truncate_sequence(d.g, o.k, derive_seed(o.seed, "nsgt", static_cast<std::uint64_t>(t)))
            .levels);
  write_truncation_stats(o.out, d.g, chains);
  std::cout << "wrote " << o.out << " (K=" << o.k << ", runs=" << o.runs << ")\n";
  if (!o.dump_prefix.empty()) {
    for (int k = 1; k <= o.k; ++k)
      write_edge_list(o.dump_prefix + ".k" + std::to_string(k) + ".edges",
                      chains.front()[static_cast<std::size_t>(k - 1)]);
    std::cout << "wrote " << o.dump_prefix << ".k1.." << o.k << ".edges\n";
  }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunOptions {
  std::string edges, attrs, labels, types;
  std::string out = "tam-out";
  int t_count = 3;
  int k_count = 4;
  Index epochs = 500;
  double learning_rate = 1e-5;
  std::optional<double> lambda;  // default decided by anomaly provenance
  Index hidden1 = 128;
  Index hidden2 = 128;
  Index neg_sample = 500;
  std::string variant = "tam";
  int scale = 1;
  double rate = 0.05;
  std::uint64_t seed = 1;
  std::string seeds;  // comma list, overrides --seed
  int jobs = 1;
  std::string config;
};

// CLI11 only reads config files attached to the top-level app, so the run
// subcommand merges its file by hand: each key names a long option, values
// fill whatever the command line left untouched, unknown keys are an error.
void apply_config_file(CLI::App& cmd, const CLI::Option* config_opt,
                       const std::string& path) {
  const std::string text = detail::read_text_file(path);
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    s.erase(0, s.find_first_not_of(ws));
    s.erase(s.find_last_not_of(ws) + 1);
    return s;
  };
  std::istringstream lines(text);
  std::string line;
  for (int line_no = 1; std::getline(lines, line); ++line_no) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto where = [&] { return path + ":" + std::to_string(line_no); };
    auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ParseError(where() + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    CLI::Option* opt = cmd.get_option_no_throw("--" + key);
    if (opt == nullptr || opt == config_opt)
      throw ValidationError(where() + ": unknown config key '" + key + "'");
    if (opt->count() > 0) continue;  // explicit flag wins
    bool shadowed = false;  // a flag that excludes this key also wins
    for (const CLI::Option* other : opt->get_excludes())
      shadowed = shadowed || other->count() > 0;
    if (shadowed) continue;
    opt->add_result(value);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ParseError(where() + ": bad value for '" + key + "': " + e.what());
    }
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    out.push_back(static_cast<std::uint64_t>(detail::parse_int(tok, "--seeds")));
  if (out.empty()) throw ValidationError("--seeds: empty list");
  return out;
}

// Chains backing truncation_stats.csv; which ones exist depends on the
// variant. Only the first seed's chains are reported.
std::optional<std::vector<std::vector<CsrAdjacency>>> stats_chains(
    const AttributedGraph& g, const VariantSpec& spec, int t_count, int k_count,
    std::uint64_t seed) {
  switch (spec.kind) {
    case Variant::RawAffinity:
      return std::nullopt;
    case Variant::RawGraph:
      return std::vector<std::vector<CsrAdjacency>>(
          static_cast<std::size_t>(t_count),
          std::vector<CsrAdjacency>(static_cast<std::size_t>(k_count), g.adjacency));
    case Variant::EdgeDrop: {
      std::vector<std::vector<CsrAdjacency>> chains;
      for (int t = 0; t < t_count; ++t)
        chains.push_back(detail::edge_drop_chain(
            g, k_count, spec.rate,
            derive_seed(seed, "edgedrop.run", static_cast<std::uint64_t>(t))));
      return chains;
    }
    case Variant::SimilarityCut:
      return std::vector<std::vector<CsrAdjacency>>(
          static_cast<std::size_t>(t_count), detail::similarity_cut_chain(g, k_count, spec.rate));
    default:
      return detail::nsgt_chains(g, t_count, k_count, seed);
  }
}

void cmd_run(const RunOptions& o) {
  Timer load_timer;
  Dataset d = load_dataset(o.edges, o.attrs, o.labels, o.types);
  const double load_seconds = load_timer.seconds();

  TrainConfig base;
  base.epochs = o.epochs;
  base.learning_rate = o.learning_rate;
  // Planted anomalies ship with a type file; those graphs get the
  // dissimilarity term by default, organically labeled ones do not.
  base.lambda = o.lambda ? *o.lambda : (o.types.empty() ? 0.0 : 1.0);
  base.hidden1 = o.hidden1;
  base.hidden2 = o.hidden2;
  base.neg_sample_size = o.neg_sample;
  base.validate();

  VariantSpec spec;
  spec.kind = parse_variant(o.variant);
  spec.scale = o.scale;
  spec.rate = o.rate;

  std::vector<std::uint64_t> seeds =
      o.seeds.empty() ? std::vector<std::uint64_t>{o.seed} : parse_seed_list(o.seeds);

  struct SeedResult {
    Vector scores;
    double score_seconds = 0.0;
  };
  std::vector<SeedResult> results;
  std::vector<EvalRun> eval_runs;
  for (std::uint64_t s : seeds) {
    SeedResult r;
    Timer score_timer;
    r.scores = score_variant(d.g, spec, o.t_count, o.k_count, base, s, o.jobs).scores;
    r.score_seconds = score_timer.seconds();
    if (d.g.labels) eval_runs.push_back(EvalRun{r.scores, *d.g.labels, d.types});
    results.push_back(std::move(r));
  }

  // Single collector: all artifacts are written only after every seed is done.
  const fs::path out_dir(o.out);
  if (seeds.size() == 1) {
    write_scores_csv(out_dir / "scores.csv", results[0].scores, d.stats.new_to_old);
  } else {
    for (std::size_t r = 0; r < seeds.size(); ++r)
      write_scores_csv(out_dir / ("scores_seed" + std::to_string(seeds[r]) + ".csv"),
                       results[r].scores, d.stats.new_to_old);
  }

  if (auto chains = stats_chains(d.g, spec, o.t_count, o.k_count, seeds.front()))
    write_truncation_stats(out_dir / "truncation_stats.csv", d.g, *chains);

  std::optional<EvalReport> rep;
  double eval_seconds = 0.0;
  if (!eval_runs.empty()) {
    Timer eval_timer;
    rep = evaluate_runs(eval_runs);
    eval_seconds = eval_timer.seconds();
    write_report_csv(out_dir / "report.csv", *rep);
  }

  {
    const fs::path path = out_dir / "timing.csv";
    auto out = open_out(path);
    out << "seed,phase,seconds\n";
    out << "-,load," << detail::format_double(load_seconds) << '\n';
    double score_total = 0.0;
    for (std::size_t r = 0; r < seeds.size(); ++r) {
      out << seeds[r] << ",score," << detail::format_double(results[r].score_seconds) << '\n';
      score_total += results[r].score_seconds;
    }
    out << "-,eval," << detail::format_double(eval_seconds) << '\n';
    out << "-,total," << detail::format_double(load_seconds + score_total + eval_seconds)
        << '\n';
    finish_out(out, path);
  }

  std::cout << "variant=" << o.variant << " T=" << o.t_count << " K=" << o.k_count
            << " lambda=" << detail::format_double(base.lambda) << '\n';
  if (rep)
    print_report(*rep, seeds);
  else
    std::cout << "no labels given; metrics skipped\n";
  std::cout << "artifacts in " << out_dir.string() << '\n';
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOptions {
  std::vector<std::string> scores;
  std::string labels, types;
  std::string out;
};

std::vector<std::pair<NodeId, double>> read_scores_csv(const std::string& path) {
  std::istringstream in(detail::read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "node_id,score")
    throw ParseError(path + ": expected header 'node_id,score'");
  std::vector<std::pair<NodeId, double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError(path + ':' + std::to_string(lineno) + ": expected 'node_id,score'");
    std::string where = path + ':' + std::to_string(lineno);
    rows.emplace_back(detail::parse_int(std::string_view(line).substr(0, comma), where),
                      detail::parse_double(std::string_view(line).substr(comma + 1), where));
  }
  if (rows.empty()) throw ParseError(path + ": no score rows");
  return rows;
}

void cmd_eval(const EvalOptions& o) {
  auto raw_labels = read_label_file(o.labels);
  std::optional<std::vector<int>> raw_types;
  if (!o.types.empty()) {
    raw_types = read_type_file(o.types);
    if (raw_types->size() != raw_labels.size())
      throw ParseError(o.types + ": " + std::to_string(raw_types->size()) +
                       " type tags for " + std::to_string(raw_labels.size()) + " labels");
  }

  std::vector<EvalRun> runs;
  for (const std::string& path : o.scores) {
    auto rows = read_scores_csv(path);
    EvalRun run;
    run.scores.resize(static_cast<Index>(rows.size()));
    run.labels.reserve(rows.size());
    if (raw_types) run.types.emplace();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto [id, score] = rows[i];
      if (id < 0 || id >= static_cast<NodeId>(raw_labels.size()))
        throw ParseError(path + ": node id " + std::to_string(id) + " outside the " +
                         std::to_string(raw_labels.size()) + " labels");
      run.scores[static_cast<Index>(i)] = score;
      run.labels.push_back(raw_labels[static_cast<std::size_t>(id)]);
      if (raw_types) run.types->push_back((*raw_types)[static_cast<std::size_t>(id)]);
    }
    runs.push_back(std::move(run));
  }

  EvalReport rep = evaluate_runs(runs);
  print_report(rep, {});
  if (!o.out.empty()) {
    write_report_csv(o.out, rep);
    std::cout << "wrote " << o.out << '\n';
  }
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchOptions {
  BenchmarkConfig cfg;
  std::string out = "bench";
};

void cmd_bench(const BenchOptions& o) {
  AttributedGraph g = make_benchmark(o.cfg);
  write_edge_list(o.out + ".edges", g.adjacency);
  write_attribute_csv(o.out + ".attrs.csv", g.attributes);
  write_int_column(o.out + ".labels", *g.labels);
  // Benchmark anomalies are planted, so they carry the structural type tag.
  std::vector<int> types(g.labels->begin(), g.labels->end());
  write_int_column(o.out + ".types", types);
  std::cout << "nodes=" << g.num_nodes() << " edges=" << g.adjacency.num_edges()
            << " anomalies=" << std::count(g.labels->begin(), g.labels->end(), 1) << '\n';
  std::cout << "wrote " << o.out << ".edges/.attrs.csv/.labels/.types\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"truncated affinity maximization: unsupervised graph anomaly detection"};
  app.require_subcommand(1);

  InjectOptions inject_o;
  auto* inject = app.add_subcommand("inject", "plant structural/contextual anomalies");
  inject->add_option("--edges", inject_o.edges, "edge list (u v per line)")->required();
  inject->add_option("--attrs", inject_o.attrs, "attribute csv")->required();
  inject->add_option("--labels", inject_o.labels, "existing labels to extend");
  inject->add_option("--structural", inject_o.structural, "PxQ: P cliques of Q nodes");
  inject->add_option("--contextual", inject_o.contextual, "number of attribute swaps");
  inject->add_option("--k,--pool", inject_o.pool, "candidates per contextual swap");
  inject->add_option("--camouflage", inject_o.camouflage_fraction,
                     "fraction of anomaly attributes pulled to the normal mean");
  inject->add_option("--seed", inject_o.seed, "master seed");
  inject->add_option("--out", inject_o.out, "output prefix");

  StatsOptions stats_o;
  auto* stats = app.add_subcommand("stats", "describe a dataset");
  stats->add_option("--edges", stats_o.edges)->required();
  stats->add_option("--attrs", stats_o.attrs)->required();
  stats->add_option("--labels", stats_o.labels);
  stats->add_option("--types", stats_o.types);

  TruncateOptions trunc_o;
  auto* trunc = app.add_subcommand("truncate", "report truncation dynamics");
  trunc->add_option("--edges", trunc_o.edges)->required();
  trunc->add_option("--attrs", trunc_o.attrs)->required();
  trunc->add_option("--labels", trunc_o.labels);
  trunc->add_option("-K,--k", trunc_o.k, "truncation iterations");
  trunc->add_option("--runs", trunc_o.runs, "independent truncation runs to average");
  trunc->add_option("--seed", trunc_o.seed);
  trunc->add_option("--out", trunc_o.out, "output csv path");
  trunc->add_option("--dump", trunc_o.dump_prefix,
                    "also write the first run's levels as PREFIX.k<N>.edges");

  RunOptions run_o;
  auto* run = app.add_subcommand("run", "train the detector and score every node");
  // Required in effect, but a config file may supply them; checked post-merge.
  run->add_option("--edges", run_o.edges);
  run->add_option("--attrs", run_o.attrs);
  run->add_option("--labels", run_o.labels, "labels for the report");
  run->add_option("--types", run_o.types, "anomaly type tags for per-type metrics");
  run->add_option("--out", run_o.out, "output directory");
  run->add_option("-T,--T", run_o.t_count, "truncation runs");
  run->add_option("-K,--K", run_o.k_count, "truncation iterations per run");
  run->add_option("--epochs", run_o.epochs);
  run->add_option("--lr,--learning-rate", run_o.learning_rate);
  run->add_option("--lambda", run_o.lambda,
                  "dissimilarity weight (default: 1 with --types, else 0)");
  run->add_option("--hidden1", run_o.hidden1);
  run->add_option("--hidden2", run_o.hidden2);
  run->add_option("--neg-sample", run_o.neg_sample,
                  "non-neighbor draws per node on graphs past 5000 nodes (-1 = exact)");
  run->add_option("--variant", run_o.variant,
                  "tam|raw-affinity|degree|tam-t|single-scale|raw-graph|edge-drop|similarity-cut");
  run->add_option("--scale", run_o.scale, "single-scale: which depth");
  run->add_option("--rate", run_o.rate, "edge-drop/similarity-cut removal share");
  auto* seed_opt = run->add_option("--seed", run_o.seed, "master seed");
  run->add_option("--seeds", run_o.seeds, "comma list of master seeds")->excludes(seed_opt);
  run->add_option("--jobs", run_o.jobs, "concurrent trainings")->check(CLI::PositiveNumber);
  auto* config_opt =
      run->add_option("--config", run_o.config, "key=value file; flags override it");

  EvalOptions eval_o;
  auto* eval = app.add_subcommand("eval", "metrics for saved score files");
  eval->add_option("--scores", eval_o.scores, "scores.csv (repeat for multi-seed)")
      ->required();
  eval->add_option("--labels", eval_o.labels)->required();
  eval->add_option("--types", eval_o.types);
  eval->add_option("--out", eval_o.out, "write report.csv here");

  BenchOptions bench_o;
  auto* bench = app.add_subcommand("bench", "generate the synthetic benchmark");
  bench->add_option("--out", bench_o.out, "output prefix");
  bench->add_option("--nodes-per-cluster", bench_o.cfg.nodes_per_cluster);
  bench->add_option("--anomalies", bench_o.cfg.num_anomalies);
  bench->add_option("--dim", bench_o.cfg.attr_dim);
  bench->add_option("--intra-draws", bench_o.cfg.intra_draws);
  bench->add_option("--anomaly-degree", bench_o.cfg.anomaly_degree);
  bench->add_option("--cluster-norm", bench_o.cfg.cluster_norm);
  bench->add_option("--noise", bench_o.cfg.noise_sigma);
  bench->add_option("--anomaly-scale", bench_o.cfg.anomaly_scale);
  bench->add_option("--anomaly-align", bench_o.cfg.anomaly_align);
  bench->add_option("--seed", bench_o.cfg.seed);

  inject->callback([&] { cmd_inject(inject_o); });
  stats->callback([&] { cmd_stats(stats_o); });
  trunc->callback([&] { cmd_truncate(trunc_o); });
  run->callback([&] {
    if (!run_o.config.empty()) apply_config_file(*run, config_opt, run_o.config);
    if (run_o.edges.empty() || run_o.attrs.empty())
      throw ValidationError("run: --edges and --attrs are required (flag or config entry)");
    cmd_run(run_o);
  });
  eval->callback([&] { cmd_eval(eval_o); });
  bench->callback([&] { cmd_bench(bench_o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // usage problems keep CLI11's exit codes
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
