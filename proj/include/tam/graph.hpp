#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tam/common.hpp"

namespace tam {

// ---------------------------------------------------------------------------
// Adjacency structure
// ---------------------------------------------------------------------------

// Compressed sparse rows over an undirected simple graph. Invariants held by
// every construction path: both directions of an edge are stored, column
// indices are strictly increasing within a row, and there are no self-loops.
struct CsrAdjacency {
  NodeId n = 0;
  std::vector<Index> row_ptr;  // size n+1
  std::vector<NodeId> col;     // size 2m

  NodeId num_nodes() const { return n; }
  Index num_edges() const { return static_cast<Index>(col.size()) / 2; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {col.data() + row_ptr[static_cast<std::size_t>(i)],
            col.data() + row_ptr[static_cast<std::size_t>(i) + 1]};
  }

  Index degree(NodeId i) const {
    return row_ptr[static_cast<std::size_t>(i) + 1] - row_ptr[static_cast<std::size_t>(i)];
  }

  bool has_edge(NodeId u, NodeId v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }

  // Canonical undirected edge enumeration: (u,v) with u < v, ordered
  // lexicographically. Positions in this list serve as stable edge ids.
  std::vector<std::pair<NodeId, NodeId>> undirected_edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(static_cast<std::size_t>(num_edges()));
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v : neighbors(u))
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  bool operator==(const CsrAdjacency&) const = default;
};

// Builds the CSR form from an arbitrary pair list: symmetrizes, drops
// self-loops, collapses duplicates. Endpoints must lie in [0,n).
inline CsrAdjacency build_adjacency(NodeId n,
                                    std::vector<std::pair<NodeId, NodeId>> edges) {
  for (auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw ValidationError("edge endpoint out of range: (" + std::to_string(u) +
                            "," + std::to_string(v) + ") with " +
                            std::to_string(n) + " nodes");
    if (u > v) std::swap(u, v);
  }
  std::erase_if(edges, [](const auto& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  CsrAdjacency a;
  a.n = n;
  a.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& [u, v] : edges) {
    ++a.row_ptr[static_cast<std::size_t>(u) + 1];
    ++a.row_ptr[static_cast<std::size_t>(v) + 1];
  }
  for (NodeId i = 0; i < n; ++i)
    a.row_ptr[static_cast<std::size_t>(i) + 1] += a.row_ptr[static_cast<std::size_t>(i)];
  a.col.resize(static_cast<std::size_t>(a.row_ptr[static_cast<std::size_t>(n)]));
  std::vector<Index> cursor(a.row_ptr.begin(), a.row_ptr.end() - 1);
  for (const auto& [u, v] : edges) {
    a.col[static_cast<std::size_t>(cursor[static_cast<std::size_t>(u)]++)] = v;
    a.col[static_cast<std::size_t>(cursor[static_cast<std::size_t>(v)]++)] = u;
  }
  for (NodeId i = 0; i < n; ++i)
    std::sort(a.col.begin() + a.row_ptr[static_cast<std::size_t>(i)],
              a.col.begin() + a.row_ptr[static_cast<std::size_t>(i) + 1]);
  return a;
}

// ---------------------------------------------------------------------------
// Attributed graph
// ---------------------------------------------------------------------------

struct AttributedGraph {
  Matrix attributes;  // N x M, row i holds node i
  CsrAdjacency adjacency;
  std::optional<std::vector<int>> labels;  // 0 normal / 1 anomaly

  NodeId num_nodes() const { return adjacency.n; }
  Index num_attributes() const { return attributes.cols(); }
};

inline void validate_labels(const std::vector<int>& labels, NodeId n) {
  if (static_cast<NodeId>(labels.size()) != n)
    throw ValidationError("label count " + std::to_string(labels.size()) +
                          " does not match node count " + std::to_string(n));
  for (int y : labels)
    if (y != 0 && y != 1)
      throw ValidationError("labels must be 0 or 1, got " + std::to_string(y));
}

// In-memory constructor used by tests and the injectors. Keeps isolated
// nodes; only the file loader enforces degree >= 1.
inline AttributedGraph make_graph(Matrix attributes,
                                  std::vector<std::pair<NodeId, NodeId>> edges,
                                  std::optional<std::vector<int>> labels = {}) {
  AttributedGraph g;
  g.adjacency = build_adjacency(attributes.rows(), std::move(edges));
  g.attributes = std::move(attributes);
  if (labels) validate_labels(*labels, g.adjacency.n);
  g.labels = std::move(labels);
  return g;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------
//
//   .edges      one "u v" pair per line, 0-based ids, treated as undirected
//   .attrs.csv  one node per line, comma-separated reals, no header
//   .labels     one 0/1 per line
//   .types      one 0/1/2 per line (normal / structural / contextual)

namespace detail {

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path);
  return text;
}

// Calls fn(line, line_number) for every line; strips \r, skips blank lines.
template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    bool blank = line.find_first_not_of(" \t") == std::string_view::npos;
    if (!blank) fn(line, line_no);
    pos = end + 1;
  }
}

inline std::int64_t parse_int(std::string_view tok, const std::string& where) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(where + ": not an integer: '" + std::string(tok) + "'");
  return value;
}

inline double parse_double(std::string_view tok, const std::string& where) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(where + ": not a number: '" + std::string(tok) + "'");
  return value;
}

// Shortest decimal form that round-trips a double exactly.
inline std::string format_double(double x) {
  char buf[32];
  if (std::isfinite(x) && std::nearbyint(x) == x && std::abs(x) < 9.0e15) {
    std::snprintf(buf, sizeof buf, "%.0f", x);
    return std::string(buf);
  }
  std::snprintf(buf, sizeof buf, "%.17g", x);
  double back = 0;
  std::from_chars(buf, buf + std::string_view(buf).size(), back);
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, x);
    std::from_chars(shorter, shorter + std::string_view(shorter).size(), back);
    if (back == x || (std::isnan(back) && std::isnan(x)))
      return std::string(shorter);
  }
  return std::string(buf);
}

}  // namespace detail

inline std::vector<std::pair<NodeId, NodeId>> read_edge_list(const std::string& path) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  detail::for_each_line(detail::read_text_file(path), [&](std::string_view line, std::size_t no) {
    const std::string where = path + ":" + std::to_string(no);
    line = line.substr(line.find_first_not_of(" \t"));
    line = line.substr(0, line.find_last_not_of(" \t") + 1);
    std::size_t split = line.find_first_of(" \t");
    std::size_t second = split == std::string_view::npos
                             ? std::string_view::npos
                             : line.find_first_not_of(" \t", split);
    if (second == std::string_view::npos)
      throw ParseError(where + ": expected 'u v'");
    std::string_view a = line.substr(0, split);
    std::string_view b = line.substr(second);
    if (b.find_first_of(" \t") != std::string_view::npos)
      throw ParseError(where + ": expected exactly two ids");
    NodeId u = detail::parse_int(a, where);
    NodeId v = detail::parse_int(b, where);
    if (u < 0 || v < 0) throw ParseError(where + ": node ids must be non-negative");
    edges.emplace_back(u, v);
  });
  return edges;
}

inline Matrix read_attribute_csv(const std::string& path) {
  std::vector<std::vector<double>> rows;
  detail::for_each_line(detail::read_text_file(path), [&](std::string_view line, std::size_t no) {
    const std::string where = path + ":" + std::to_string(no);
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      std::string_view tok = line.substr(pos, comma == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : comma - pos);
      while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
      while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.remove_suffix(1);
      row.push_back(detail::parse_double(tok, where));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(where + ": expected " + std::to_string(rows.front().size()) +
                       " columns, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  });
  if (rows.empty()) throw ParseError(path + ": no attribute rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline std::vector<int> read_int_column(const std::string& path, int max_value) {
  std::vector<int> out;
  detail::for_each_line(detail::read_text_file(path), [&](std::string_view line, std::size_t no) {
    const std::string where = path + ":" + std::to_string(no);
    std::size_t a = line.find_first_not_of(" \t");
    std::size_t b = line.find_last_not_of(" \t");
    std::int64_t v = detail::parse_int(line.substr(a, b - a + 1), where);
    if (v < 0 || v > max_value)
      throw ParseError(where + ": value out of range [0," + std::to_string(max_value) + "]");
    out.push_back(static_cast<int>(v));
  });
  return out;
}

inline std::vector<int> read_label_file(const std::string& path) {
  return read_int_column(path, 1);
}

inline std::vector<int> read_type_file(const std::string& path) {
  return read_int_column(path, 2);
}

inline void write_edge_list(const std::string& path, const CsrAdjacency& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& [u, v] : a.undirected_edges())
    out << u << ' ' << v << '\n';
  if (!out) throw IoError("write failure on " + path);
}

inline void write_attribute_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failure on " + path);
}

inline void write_int_column(const std::string& path, const std::vector<int>& v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (int x : v) out << x << '\n';
  if (!out) throw IoError("write failure on " + path);
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

struct LoadStats {
  Index self_loops_dropped = 0;
  Index duplicate_edges_dropped = 0;
  Index isolated_nodes_removed = 0;
  // old_to_new[orig] = compacted id, or -1 when the node was removed.
  std::vector<NodeId> old_to_new;
  std::vector<NodeId> new_to_old;
};

struct LoadedGraph {
  AttributedGraph graph;
  LoadStats stats;
};

// Ingests the on-disk formats into a clean graph: symmetrized, deduplicated,
// self-loops dropped, isolated nodes removed with an id remap. Attribute and
// label rows are compacted along with the remap.
inline LoadedGraph load_graph(const std::string& edges_path,
                              const std::string& attrs_path,
                              const std::optional<std::string>& labels_path = {}) {
  Matrix attrs = read_attribute_csv(attrs_path);
  const NodeId n_raw = attrs.rows();
  auto raw = read_edge_list(edges_path);
  for (const auto& [u, v] : raw)
    if (u >= n_raw || v >= n_raw)
      throw ParseError(edges_path + ": node id " + std::to_string(std::max(u, v)) +
                       " has no attribute row (have " + std::to_string(n_raw) + ")");

  LoadStats stats;
  std::vector<std::pair<NodeId, NodeId>> pairs;
  pairs.reserve(raw.size());
  for (auto [u, v] : raw) {
    if (u == v) {
      ++stats.self_loops_dropped;
      continue;
    }
    if (u > v) std::swap(u, v);
    pairs.emplace_back(u, v);
  }
  std::sort(pairs.begin(), pairs.end());
  auto last = std::unique(pairs.begin(), pairs.end());
  stats.duplicate_edges_dropped = static_cast<Index>(pairs.end() - last);
  pairs.erase(last, pairs.end());
  if (pairs.empty()) throw ValidationError(edges_path + ": graph has no usable edges");

  std::vector<char> touched(static_cast<std::size_t>(n_raw), 0);
  for (const auto& [u, v] : pairs) {
    touched[static_cast<std::size_t>(u)] = 1;
    touched[static_cast<std::size_t>(v)] = 1;
  }
  stats.old_to_new.assign(static_cast<std::size_t>(n_raw), -1);
  for (NodeId i = 0; i < n_raw; ++i) {
    if (touched[static_cast<std::size_t>(i)]) {
      stats.old_to_new[static_cast<std::size_t>(i)] =
          static_cast<NodeId>(stats.new_to_old.size());
      stats.new_to_old.push_back(i);
    } else {
      ++stats.isolated_nodes_removed;
    }
  }
  const NodeId n = static_cast<NodeId>(stats.new_to_old.size());
  for (auto& [u, v] : pairs) {
    u = stats.old_to_new[static_cast<std::size_t>(u)];
    v = stats.old_to_new[static_cast<std::size_t>(v)];
  }

  AttributedGraph g;
  g.adjacency = build_adjacency(n, std::move(pairs));
  if (stats.isolated_nodes_removed == 0) {
    g.attributes = std::move(attrs);
  } else {
    g.attributes.resize(n, attrs.cols());
    for (NodeId i = 0; i < n; ++i)
      g.attributes.row(i) = attrs.row(stats.new_to_old[static_cast<std::size_t>(i)]);
  }
  if (labels_path) {
    auto raw_labels = read_label_file(*labels_path);
    if (static_cast<NodeId>(raw_labels.size()) != n_raw)
      throw ParseError(*labels_path + ": " + std::to_string(raw_labels.size()) +
                       " labels for " + std::to_string(n_raw) + " attribute rows");
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i)
      labels[static_cast<std::size_t>(i)] =
          raw_labels[static_cast<std::size_t>(stats.new_to_old[static_cast<std::size_t>(i)])];
    g.labels = std::move(labels);
  }
  return {std::move(g), std::move(stats)};
}

// ---------------------------------------------------------------------------
// Normalized adjacency
// ---------------------------------------------------------------------------

// CSR matrix with values; only what the convolution needs.
struct CsrMatrix {
  NodeId n = 0;
  std::vector<Index> row_ptr;
  std::vector<NodeId> col;
  std::vector<double> val;
};

// D^{-1/2} (A [+ I]) D^{-1/2} with D the degree matrix of A (+ I when
// self-loops are added). Without self-loops a degree-0 row has no valid
// scaling and is rejected.
inline CsrMatrix symmetric_normalize(const CsrAdjacency& a, bool add_self_loops) {
  std::vector<double> inv_sqrt(static_cast<std::size_t>(a.n));
  for (NodeId i = 0; i < a.n; ++i) {
    Index d = a.degree(i) + (add_self_loops ? 1 : 0);
    if (d == 0)
      throw ValidationError("symmetric_normalize: node " + std::to_string(i) +
                            " has degree 0 and no self-loop");
    inv_sqrt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(static_cast<double>(d));
  }
  CsrMatrix m;
  m.n = a.n;
  m.row_ptr.assign(static_cast<std::size_t>(a.n) + 1, 0);
  for (NodeId i = 0; i < a.n; ++i)
    m.row_ptr[static_cast<std::size_t>(i) + 1] =
        m.row_ptr[static_cast<std::size_t>(i)] + a.degree(i) + (add_self_loops ? 1 : 0);
  m.col.resize(static_cast<std::size_t>(m.row_ptr.back()));
  m.val.resize(m.col.size());
  for (NodeId i = 0; i < a.n; ++i) {
    Index w = m.row_ptr[static_cast<std::size_t>(i)];
    bool self_written = !add_self_loops;
    for (NodeId j : a.neighbors(i)) {
      if (!self_written && j > i) {
        m.col[static_cast<std::size_t>(w)] = i;
        m.val[static_cast<std::size_t>(w)] =
            inv_sqrt[static_cast<std::size_t>(i)] * inv_sqrt[static_cast<std::size_t>(i)];
        ++w;
        self_written = true;
      }
      m.col[static_cast<std::size_t>(w)] = j;
      m.val[static_cast<std::size_t>(w)] =
          inv_sqrt[static_cast<std::size_t>(i)] * inv_sqrt[static_cast<std::size_t>(j)];
      ++w;
    }
    if (!self_written) {
      m.col[static_cast<std::size_t>(w)] = i;
      m.val[static_cast<std::size_t>(w)] =
          inv_sqrt[static_cast<std::size_t>(i)] * inv_sqrt[static_cast<std::size_t>(i)];
      ++w;
    }
  }
  return m;
}

inline Matrix spmm(const CsrMatrix& m, const Matrix& x) {
  if (x.rows() != m.n)
    throw ValidationError("spmm: matrix has " + std::to_string(x.rows()) +
                          " rows, adjacency has " + std::to_string(m.n) + " nodes");
  Matrix out = Matrix::Zero(m.n, x.cols());
  for (NodeId i = 0; i < m.n; ++i)
    for (Index p = m.row_ptr[static_cast<std::size_t>(i)];
         p < m.row_ptr[static_cast<std::size_t>(i) + 1]; ++p)
      out.row(i) += m.val[static_cast<std::size_t>(p)] *
                    x.row(m.col[static_cast<std::size_t>(p)]);
  return out;
}

// ---------------------------------------------------------------------------
// Edge distances
// ---------------------------------------------------------------------------

// Euclidean attribute distances per edge, aligned with the canonical edge
// enumeration. node_max is the max over a node's incident edges (-inf for a
// node with none, so "node_max > mean" is false exactly when the node has no
// distance to offer).
struct EdgeDistanceMap {
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<double> dist;
  double mean = 0.0;
  std::vector<double> node_max;
};

inline EdgeDistanceMap edge_distances(const Matrix& attributes, const CsrAdjacency& a) {
  if (attributes.rows() != a.n)
    throw ValidationError("edge_distances: attribute rows do not match node count");
  EdgeDistanceMap m;
  m.edges = a.undirected_edges();
  m.dist.resize(m.edges.size());
  m.node_max.assign(static_cast<std::size_t>(a.n),
                    -std::numeric_limits<double>::infinity());
  double sum = 0.0;
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    auto [u, v] = m.edges[e];
    double d = (attributes.row(u) - attributes.row(v)).norm();
    m.dist[e] = d;
    sum += d;
    m.node_max[static_cast<std::size_t>(u)] = std::max(m.node_max[static_cast<std::size_t>(u)], d);
    m.node_max[static_cast<std::size_t>(v)] = std::max(m.node_max[static_cast<std::size_t>(v)], d);
  }
  m.mean = m.edges.empty() ? 0.0 : sum / static_cast<double>(m.edges.size());
  return m;
}

inline EdgeDistanceMap edge_distances(const AttributedGraph& g) {
  return edge_distances(g.attributes, g.adjacency);
}

// ---------------------------------------------------------------------------
// Label homophily
// ---------------------------------------------------------------------------

// Per-node fraction of same-label neighbors, plus per-class summaries.
// Degree-0 nodes (possible on truncated adjacencies) carry NaN and are left
// out of the class means.
struct HomophilyStats {
  Vector homo;    // fraction of neighbors sharing the node's label
  Vector hetero;  // 1 - homo for degree >= 1 nodes
  double mean_homo_normal = std::numeric_limits<double>::quiet_NaN();
  double mean_homo_anomaly = std::numeric_limits<double>::quiet_NaN();
  Index counted_normal = 0;
  Index counted_anomaly = 0;
  Index anomaly_adjacent_edges = 0;  // undirected edges touching a label-1 node
};

inline HomophilyStats homophily_stats(const CsrAdjacency& a, const std::vector<int>& labels) {
  validate_labels(labels, a.n);
  HomophilyStats s;
  s.homo.resize(a.n);
  s.hetero.resize(a.n);
  double sum_normal = 0.0, sum_anomaly = 0.0;
  for (NodeId i = 0; i < a.n; ++i) {
    Index deg = a.degree(i);
    if (deg == 0) {
      s.homo[i] = s.hetero[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    Index same = 0;
    for (NodeId j : a.neighbors(i))
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) ++same;
    s.homo[i] = static_cast<double>(same) / static_cast<double>(deg);
    s.hetero[i] = 1.0 - s.homo[i];
    if (labels[static_cast<std::size_t>(i)] == 0) {
      sum_normal += s.homo[i];
      ++s.counted_normal;
    } else {
      sum_anomaly += s.homo[i];
      ++s.counted_anomaly;
    }
  }
  if (s.counted_normal > 0) s.mean_homo_normal = sum_normal / static_cast<double>(s.counted_normal);
  if (s.counted_anomaly > 0) s.mean_homo_anomaly = sum_anomaly / static_cast<double>(s.counted_anomaly);
  for (NodeId u = 0; u < a.n; ++u)
    for (NodeId v : a.neighbors(u))
      if (u < v && (labels[static_cast<std::size_t>(u)] == 1 ||
                    labels[static_cast<std::size_t>(v)] == 1))
        ++s.anomaly_adjacent_edges;
  return s;
}

inline HomophilyStats homophily_stats(const AttributedGraph& g) {
  if (!g.labels) throw ValidationError("homophily_stats: graph has no labels");
  return homophily_stats(g.adjacency, *g.labels);
}

}  // namespace tam
