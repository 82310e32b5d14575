#pragma once

// Inner-loop kernels used by the solver's sampled evaluations, row-wise
// normal equations and LSQR vector updates. Every kernel has a scalar
// reference implementation; an AVX2+FMA variant is selected at runtime when
// the CPU supports it. Set TTN_KERNELS=scalar to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace ttn::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  double (*dot)(const double* x, const double* y, std::size_t n);
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  double (*sumsq)(const double* x, std::size_t n);
  double (*sqdiff)(const double* x, const double* y, std::size_t n);
  // y[0..rows) = A x for column-major A (rows x cols).
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // C += alpha * x x^T on the full n x n column-major C.
  void (*syr)(double alpha, const double* x, std::size_t n, double* c);
  // sum_k x[k] * base[k * stride]
  double (*strided_dot)(const double* x, const double* base, std::size_t stride, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when not compiled in.
const KernelTable* avx2_table();

bool isa_supported(Isa isa);
Isa active_isa();
// Throws std::invalid_argument if the ISA is not supported on this machine.
void set_isa(Isa isa);
std::string_view isa_name(Isa isa);

const KernelTable& active();

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline double sumsq(std::span<const double> x) { return active().sumsq(x.data(), x.size()); }
inline double sqdiff(std::span<const double> x, std::span<const double> y) {
  return active().sqdiff(x.data(), y.data(), x.size());
}
inline void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  active().gemv(a, rows, cols, x, y);
}
inline void syr(double alpha, const double* x, std::size_t n, double* c) {
  active().syr(alpha, x, n, c);
}
inline double strided_dot(const double* x, const double* base, std::size_t stride, std::size_t n) {
  return active().strided_dot(x, base, stride, n);
}

}  // namespace ttn::kernels
