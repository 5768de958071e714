#include <cmath>
#include <cstddef>

#include "ecpe/kernels.hpp"

// Reference kernels. Plain loops, no FMA contraction (the build passes
// -ffp-contract=off), so these results are reproducible across x86/ARM
// and serve as the baseline the SIMD variants are tested against.

namespace ecpe::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc_scalar(const double* a, const double* b, double* out,
                    std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

void gemv_acc_scalar(const double* w, std::size_t rows, std::size_t cols,
                     const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] += acc;
  }
}

void gemv_t_acc_scalar(const double* w, std::size_t rows, std::size_t cols,
                       const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    const double xr = x[r];
    for (std::size_t c = 0; c < cols; ++c) y[c] += xr * wr[c];
  }
}

void ger_acc_scalar(double alpha, const double* x, const double* y, double* w,
                    std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* wr = w + r * cols;
    const double ax = alpha * x[r];
    for (std::size_t c = 0; c < cols; ++c) wr[c] += ax * y[c];
  }
}

void adam_scalar(double* p, double* m, double* v, const double* g,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bias1, double bias2, double l2) {
  const double om1 = 1.0 - beta1;
  const double om2 = 1.0 - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double ge = g[i] + l2 * p[i];
    m[i] = beta1 * m[i] + om1 * ge;
    v[i] = beta2 * v[i] + om2 * ge * ge;
    const double mhat = m[i] / bias1;
    const double vhat = v[i] / bias2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

constexpr Ops kScalarOps = {
    "scalar",        dot_scalar,    axpy_scalar,       scale_scalar,
    mul_scalar,      mul_acc_scalar, gemv_acc_scalar,  gemv_t_acc_scalar,
    ger_acc_scalar,  adam_scalar,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

}  // namespace ecpe::kernels
