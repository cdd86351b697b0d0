#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include "tam/common.hpp"

namespace tam {

// All randomness in the project flows from one master seed through
// derive_seed(master, tag, a, b): a splittable scheme where every consumer
// (per-model init, per-iteration truncation draws, per-epoch negative
// samples, ...) owns an independent stream named by a string tag plus up to
// two indices. Streams never share state, so results do not depend on
// evaluation order or thread count.

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// Finalizer from splitmix64; bijective, avalanches all 64 bits.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
  return mix64(mix64(mix64(master ^ fnv1a64(tag)) ^ a) ^ b);
}

// splitmix64 stream generator. Chosen over std:: engines because its output
// is pinned by this header alone: byte-identical runs across platforms and
// standard libraries are a hard requirement.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // Uniform on [0,1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo,hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform on [0,n) without modulo bias (Lemire's multiply-shift rejection).
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw ValidationError("Rng::bounded: n must be positive");
    while (true) {
      std::uint64_t x = next();
      __uint128_t m = static_cast<__uint128_t>(x) * n;
      auto lo = static_cast<std::uint64_t>(m);
      if (lo >= n || lo >= (0 - n) % n) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  // Standard normal via Box-Muller; std::normal_distribution is not
  // bit-stable across standard libraries.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 on (0,1] so the log stays finite.
    double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from [0,n), in draw order (partial Fisher-Yates).
  std::vector<NodeId> sample_without_replacement(NodeId n, NodeId k) {
    if (k < 0 || k > n)
      throw ValidationError("sample_without_replacement: need 0 <= k <= n");
    std::vector<NodeId> pool(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::vector<NodeId> out(static_cast<std::size_t>(k));
    for (NodeId i = 0; i < k; ++i) {
      std::uint64_t j = i + bounded(static_cast<std::uint64_t>(n - i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
      out[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
    }
    return out;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace tam
