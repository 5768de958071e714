#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ecpe/rng.hpp"

namespace ecpe {

using Vec = std::vector<double>;

// Row-major dense matrix of doubles. Vectors with a parameter identity
// (biases, context vectors) are stored as 1 x n matrices so the optimizer
// and checkpoint code can treat every parameter uniformly.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double* row(std::size_t r) { return a.data() + r * cols; }
  const double* row(std::size_t r) const { return a.data() + r * cols; }
  double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  std::size_t size() const { return a.size(); }
  double* data() { return a.data(); }
  const double* data() const { return a.data(); }
  bool empty() const { return a.empty(); }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

inline void fill_uniform(Mat& m, double lo, double hi, Rng& rng) {
  for (double& x : m.a) x = rng.uniform(lo, hi);
}

inline bool all_finite(const double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) return false;
  }
  return true;
}

inline bool all_finite(const Mat& m) { return all_finite(m.data(), m.size()); }

}  // namespace ecpe
