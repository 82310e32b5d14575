// Compiled with -mavx2 -mfma. Only standard and intrinsic headers here.
#include <immintrin.h>

#include "ttn/kernels.hpp"

namespace ttn::kernels {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
  }
  if (i + 4 <= n) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

double sumsq_avx2(const double* x, std::size_t n) { return dot_avx2(x, x, n); }

double sqdiff_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

void gemv_avx2(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  std::size_t i = 0;
  // Four output rows at a time, columns streamed.
  for (; i + 4 <= rows; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < cols; ++j)
      acc = _mm256_fmadd_pd(_mm256_set1_pd(x[j]), _mm256_loadu_pd(a + j * rows + i), acc);
    _mm256_storeu_pd(y + i, acc);
  }
  for (; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += a[j * rows + i] * x[j];
    y[i] = s;
  }
}

void syr_avx2(double alpha, const double* x, std::size_t n, double* c) {
  for (std::size_t j = 0; j < n; ++j) axpy_avx2(alpha * x[j], x, c + j * n, n);
}

double strided_dot_avx2(const double* x, const double* base, std::size_t stride,
                        std::size_t n) {
  if (stride == 1) return dot_avx2(x, base, n);
  __m256d acc = _mm256_setzero_pd();
  const __m128i offs = _mm_set_epi32(static_cast<int>(3 * stride), static_cast<int>(2 * stride),
                                     static_cast<int>(stride), 0);
  std::size_t k = 0;
  // 32-bit gather offsets; fall back to scalar for huge strides.
  if (4 * stride < (1u << 30)) {
    for (; k + 4 <= n; k += 4) {
      const __m256d g = _mm256_i32gather_pd(base + k * stride, offs, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), g, acc);
    }
  }
  double s = hsum(acc);
  for (; k < n; ++k) s += x[k] * base[k * stride];
  return s;
}

constexpr KernelTable kAvx2{dot_avx2,  axpy_avx2, sumsq_avx2,      sqdiff_avx2,
                            gemv_avx2, syr_avx2,  strided_dot_avx2};

}  // namespace

const KernelTable* avx2_table_impl() { return &kAvx2; }

}  // namespace ttn::kernels
