#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace gcx {

// All randomness in the project goes through this header. std::mt19937_64 is
// bit-exact across implementations, but the standard distributions are not,
// so the draws below are hand-rolled to keep seeded runs reproducible
// everywhere.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent substream seed for (seed, tag). Used to give every node /
// repeat / method its own stream so thread scheduling cannot change results.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t s = seed ^ (tag * 0x9e3779b97f4a7c15ULL + 0x1d8e4e27c47d124fULL);
  splitmix64(s);
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, bound). Rejection keeps it exactly uniform.
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  int uniform_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(uniform_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from {0, ..., n-1} via partial Fisher-Yates; order is
  // the draw order, not sorted.
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: bad k");
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(static_cast<std::uint64_t>(n - i))) + static_cast<std::size_t>(i);
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      out.push_back(pool[static_cast<std::size_t>(i)]);
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gcx
