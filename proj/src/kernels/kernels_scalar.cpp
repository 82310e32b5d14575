#include "ttn/kernels.hpp"

namespace ttn::kernels {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double sumsq_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sqdiff_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x,
                 double* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    const double xj = x[j];
    const double* col = a + j * rows;
    for (std::size_t i = 0; i < rows; ++i) y[i] += xj * col[i];
  }
}

void syr_scalar(double alpha, const double* x, std::size_t n, double* c) {
  for (std::size_t j = 0; j < n; ++j) {
    const double axj = alpha * x[j];
    double* col = c + j * n;
    for (std::size_t i = 0; i < n; ++i) col[i] += axj * x[i];
  }
}

double strided_dot_scalar(const double* x, const double* base, std::size_t stride,
                          std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += x[k] * base[k * stride];
  return s;
}

constexpr KernelTable kScalar{dot_scalar,  axpy_scalar, sumsq_scalar,      sqdiff_scalar,
                              gemv_scalar, syr_scalar,  strided_dot_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace ttn::kernels
