#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ttn/tensor.hpp"

namespace ttn {

struct AngleReport {
  std::vector<double> angles;  // radians, descending
  double sin_max = 0.0;
};

// Canonical angles between span(X) and span(Y); both are orthonormalized first.
// Throws on rank-deficient input or mismatched shapes.
AngleReport canonical_angles(const Matrix& x, const Matrix& y);

// ||(I - A A^T) B||_2 with A and B orthonormalized: sin of the largest angle
// when the ranks agree, and the uncovered part of span(B) otherwise.
double subspace_sin(const Matrix& a, const Matrix& b);

// mu = max_i ||A(i,:)||^2 * I / r; requires orthonormal A.
double incoherence(const Matrix& a);

// (10/3) (log(2 prod I) + 5) max_n prod_{k != n} mu_k r_k / I_k
double sampling_threshold(std::span<const double> mu, std::span<const std::size_t> r,
                          std::span<const std::size_t> dims);

struct CoreFit {
  DenseTensor x_opt;
  double error = 0.0;  // ||[[x_opt; A]] - T||_F
};

// Full-observation optimum [[T; A^T]] for orthonormal factors.
CoreFit oracle_core_fit(const DenseTensor& t, std::span<const Matrix> factors);

// Core minimizing ||Pi([[X; A]] - T)|| over the listed linear indices (dense
// QR of the sampled Kronecker rows); error is measured on the full tensor.
CoreFit restricted_core_fit(const DenseTensor& t, std::span<const Matrix> factors,
                            std::span<const std::uint64_t> linear);

struct SandwichReport {
  int trials = 0;
  int in_band = 0;       // psi/phi in [1, 3/sqrt(2) + 0.01]
  int lower_ok = 0;      // psi >= phi (1 - 1e-10)
  double fraction = 0.0; // in_band / trials
  double p_star = 0.0;
  bool outside_regime = false;  // p < 4 p* or p > 0.5
  std::vector<double> ratios;
};

SandwichReport sandwich_test(const DenseTensor& t, std::span<const Matrix> factors, double p,
                             int trials, std::uint64_t seed = 0);

struct KronAngleCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// ||sin Theta(A_N (x) ... (x) A_1, Ahat_N (x) ... (x) Ahat_1)|| against
// 2^{(N-1)/2} max_k ||sin Theta(A_k, Ahat_k)||.
KronAngleCheck kron_angle_check(std::span<const Matrix> a, std::span<const Matrix> ahat);

inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

// 10 log10(max^2 / MSE); +inf when MSE is zero.
double psnr(const DenseTensor& reference, const DenseTensor& test, double max_val = 255.0);

}  // namespace ttn
