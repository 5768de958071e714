#pragma once

#include <cstddef>
#include <string>

namespace ecpe::kernels {

// Double-precision inner loops behind the recurrent encoders, the attention
// layer, the pair filter, and the optimizer. A scalar reference table and an
// AVX2 table live in separate translation units; which one runs is decided
// at runtime (see select()). The two tables are equivalence-tested against
// each other in tests/test_kernels.cpp.
struct Ops {
  const char* name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  // out[i] = a[i] * b[i]
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // out[i] += a[i] * b[i]
  void (*mul_acc)(const double* a, const double* b, double* out, std::size_t n);
  // y[r] += dot(W[r,:], x), W row-major rows x cols
  void (*gemv_acc)(const double* w, std::size_t rows, std::size_t cols,
                   const double* x, double* y);
  // y[c] += sum_r W[r,c] * x[r]
  void (*gemv_t_acc)(const double* w, std::size_t rows, std::size_t cols,
                     const double* x, double* y);
  // W[r,c] += alpha * x[r] * y[c]
  void (*ger_acc)(double alpha, const double* x, const double* y, double* w,
                  std::size_t rows, std::size_t cols);
  // Adam step over one parameter block. bias1 = 1 - beta1^t and
  // bias2 = 1 - beta2^t are precomputed by the caller; l2 adds l2 * p[i]
  // to the gradient before the moment updates.
  void (*adam)(double* p, double* m, double* v, const double* g,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bias1, double bias2, double l2);
};

enum class Backend { Auto, Scalar, Avx2 };

const Ops& scalar_ops();
bool avx2_supported();
// AVX2 table; falls back to scalar_ops() when the CPU or build lacks AVX2.
const Ops& avx2_ops();

// Active table. The first call resolves Backend::Auto against the CPU;
// the ECPE_KERNELS environment variable ("scalar" / "avx2") overrides the
// automatic choice. select() switches at runtime and returns the backend
// actually installed (requests for an unsupported backend fall back).
const Ops& active();
Backend select(Backend b);
Backend active_backend();
std::string backend_name(Backend b);

}  // namespace ecpe::kernels
