#pragma once

// Shared helpers for the unit tests: seeded random data and brute-force
// reference implementations that avoid the library's own code paths.

#include <cmath>
#include <cstdint>
#include <vector>

#include "ttn/rng.hpp"
#include "ttn/tensor.hpp"

namespace testing {

using ttn::DenseTensor;
using ttn::Dims;
using ttn::Matrix;

inline DenseTensor random_tensor(const Dims& dims, std::uint64_t seed) {
  ttn::CounterRng rng(seed);
  DenseTensor t(dims);
  for (auto& v : t.storage()) v = rng.normal();
  return t;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  ttn::CounterRng rng(seed);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.normal();
  return m;
}

inline Matrix random_orthonormal(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  const Matrix m = random_matrix(rows, cols, seed);
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

// Column-major linear index computed by hand.
inline std::size_t lin(const Dims& dims, const std::vector<std::size_t>& ix) {
  std::size_t l = 0, stride = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    l += ix[k] * stride;
    stride *= dims[k];
  }
  return l;
}

inline std::vector<std::size_t> multi(const Dims& dims, std::size_t l) {
  std::vector<std::size_t> ix(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) {
    ix[k] = l % dims[k];
    l /= dims[k];
  }
  return ix;
}

inline std::size_t count(const Dims& dims) {
  std::size_t p = 1;
  for (auto d : dims) p *= d;
  return p;
}

// Entry-by-entry [[G; A_1..A_N]].
inline DenseTensor naive_tucker(const DenseTensor& g, const std::vector<Matrix>& a) {
  Dims out;
  for (const auto& m : a) out.push_back(static_cast<std::size_t>(m.rows()));
  DenseTensor t(out);
  for (std::size_t l = 0; l < count(out); ++l) {
    const auto i = multi(out, l);
    double s = 0.0;
    for (std::size_t c = 0; c < g.size(); ++c) {
      const auto j = multi(g.dims(), c);
      double v = g[c];
      for (std::size_t k = 0; k < out.size(); ++k)
        v *= a[k](static_cast<Eigen::Index>(i[k]), static_cast<Eigen::Index>(j[k]));
      s += v;
    }
    t[l] = s;
  }
  return t;
}

inline double fro(const DenseTensor& t) {
  double s = 0.0;
  for (std::size_t l = 0; l < t.size(); ++l) s += t[l] * t[l];
  return std::sqrt(s);
}

inline double rel_diff(const DenseTensor& a, const DenseTensor& b) {
  double d = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) d += (a[l] - b[l]) * (a[l] - b[l]);
  const double n = fro(b);
  return n > 0.0 ? std::sqrt(d) / n : std::sqrt(d);
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double n = b.norm();
  return n > 0.0 ? (a - b).norm() / n : (a - b).norm();
}

// The 2x2x2 fixture with T[i,j,k] = i + 2(j-1) + 4(k-1) (1-based).
inline DenseTensor one_to_eight() {
  return DenseTensor({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
}

}  // namespace testing
