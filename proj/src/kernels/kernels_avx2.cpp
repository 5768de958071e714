// AVX2/FMA variants of the double-precision kernels. This translation unit
// is compiled with -mavx2 -mfma and only entered at runtime after a CPUID
// check (see dispatch.cpp). FMA contraction changes rounding relative to
// the scalar table, so equivalence tests compare with a small tolerance
// rather than bit-exactly.

#include "ecpe/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace ecpe::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i,
                     _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                                _mm256_loadu_pd(out + i));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] += a[i] * b[i];
}

void gemv_acc_avx2(const double* w, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] += dot_avx2(w + r * cols, x, cols);
  }
}

void gemv_t_acc_avx2(const double* w, std::size_t rows, std::size_t cols,
                     const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_avx2(x[r], w + r * cols, y, cols);
  }
}

void ger_acc_avx2(double alpha, const double* x, const double* y, double* w,
                  std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy_avx2(alpha * x[r], y, w + r * cols, cols);
  }
}

void adam_avx2(double* p, double* m, double* v, const double* g,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bias1, double bias2, double l2) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vo1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d vo2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vl2 = _mm256_set1_pd(l2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vbias1 = _mm256_set1_pd(bias1);
  const __m256d vbias2 = _mm256_set1_pd(bias2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vp = _mm256_loadu_pd(p + i);
    __m256d ge = _mm256_fmadd_pd(vl2, vp, _mm256_loadu_pd(g + i));
    __m256d vm = _mm256_fmadd_pd(vo1, ge, _mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)));
    __m256d vv = _mm256_fmadd_pd(vo2, _mm256_mul_pd(ge, ge),
                                 _mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)));
    _mm256_storeu_pd(m + i, vm);
    _mm256_storeu_pd(v + i, vv);
    __m256d mhat = _mm256_div_pd(vm, vbias1);
    __m256d vhat = _mm256_div_pd(vv, vbias2);
    __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    vp = _mm256_sub_pd(vp, _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom));
    _mm256_storeu_pd(p + i, vp);
  }
  for (; i < n; ++i) {
    const double ge = g[i] + l2 * p[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * ge;
    v[i] = beta2 * v[i] + (1.0 - beta2) * ge * ge;
    const double mhat = m[i] / bias1;
    const double vhat = v[i] / bias2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

constexpr Ops kAvx2Ops = {
    "avx2",       dot_avx2,     axpy_avx2,     scale_avx2,
    mul_avx2,     mul_acc_avx2, gemv_acc_avx2, gemv_t_acc_avx2,
    ger_acc_avx2, adam_avx2,
};

}  // namespace

const Ops& avx2_ops_impl();
const Ops& avx2_ops_impl() { return kAvx2Ops; }

}  // namespace ecpe::kernels

#endif  // __AVX2__ && __FMA__
