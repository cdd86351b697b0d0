#pragma once

// Shared fixtures for the test binaries: conversions between library types
// and the oracle's plain containers, random instance generators, temp dirs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tam/tam.hpp"

#include "oracles.hpp"

namespace support {

inline oracle::Dense to_dense(const tam::Matrix& m) {
  oracle::Dense out(static_cast<std::size_t>(m.rows()),
                    std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (tam::Index i = 0; i < m.rows(); ++i)
    for (tam::Index j = 0; j < m.cols(); ++j)
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

inline oracle::Dense to_dense(const tam::CsrAdjacency& a) {
  oracle::Dense out = oracle::zeros(static_cast<std::size_t>(a.n),
                                    static_cast<std::size_t>(a.n));
  for (tam::NodeId i = 0; i < a.n; ++i)
    for (tam::NodeId j : a.neighbors(i))
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1.0;
  return out;
}

inline std::vector<double> to_std(const tam::Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// mt19937_64 is fully specified by the standard, so instances are stable
// across platforms; all value transforms are written out by hand.
struct TestRng {
  std::mt19937_64 engine;
  explicit TestRng(std::uint64_t seed) : engine(seed) {}

  double uniform(double lo, double hi) {
    double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  std::int64_t below(std::int64_t n) {
    return static_cast<std::int64_t>(engine() % static_cast<std::uint64_t>(n));
  }
};

// Connected-ish random graph: a spanning path plus extra random edges.
inline std::vector<std::pair<tam::NodeId, tam::NodeId>> random_edges(TestRng& rng,
                                                                     tam::NodeId n,
                                                                     tam::Index extra) {
  std::vector<std::pair<tam::NodeId, tam::NodeId>> edges;
  for (tam::NodeId i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  for (tam::Index e = 0; e < extra; ++e) {
    tam::NodeId u = rng.below(n), v = rng.below(n);
    if (u != v) edges.emplace_back(u, v);
  }
  return edges;
}

inline tam::Matrix random_matrix(TestRng& rng, tam::Index rows, tam::Index cols,
                                 double lo = -1.0, double hi = 1.0) {
  tam::Matrix m(rows, cols);
  for (tam::Index i = 0; i < rows; ++i)
    for (tam::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

inline tam::AttributedGraph random_graph(TestRng& rng, tam::NodeId n, tam::Index dim,
                                         tam::Index extra_edges) {
  return tam::make_graph(random_matrix(rng, n, dim), random_edges(rng, n, extra_edges));
}

// Scoped temp directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& stem) {
    path = std::filesystem::temp_directory_path() /
           (stem + "-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace support
