#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace ecpe {

// Seeded generator with explicit draw formulas. std::mt19937_64 output is
// pinned by the standard; the mappings below avoid std::*_distribution,
// whose results differ across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // 53-bit uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Draw in [0, n) via 128-bit multiply-shift.
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(gen_()) * n) >> 64);
  }

  int range(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(bounded(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  bool bernoulli(double p) { return uniform01() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[bounded(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ecpe
