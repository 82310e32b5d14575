#include "ttn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ttn/model.hpp"
#include "ttn/observation.hpp"
#include "ttn/rng.hpp"

namespace ttn {

namespace {

Matrix orthonormal_basis(const Matrix& x, const char* what) {
  if (x.cols() == 0 || x.rows() < x.cols())
    throw std::invalid_argument(std::string(what) + ": need rows >= cols >= 1");
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(1e-12);
  if (qr.rank() < x.cols()) throw std::invalid_argument(std::string(what) + ": rank-deficient input");
  Eigen::HouseholderQR<Matrix> hq(x);
  return hq.householderQ() * Matrix::Identity(x.rows(), x.cols());
}

}  // namespace

AngleReport canonical_angles(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw std::invalid_argument("canonical_angles: X and Y must have the same shape");
  const Matrix qx = orthonormal_basis(x, "canonical_angles");
  const Matrix qy = orthonormal_basis(y, "canonical_angles");
  // Cosines from Y^T X, sines from (I - Y Y^T) X; atan2 keeps both ends accurate.
  Eigen::JacobiSVD<Matrix> cs(qy.transpose() * qx);
  const Matrix perp = qx - qy * (qy.transpose() * qx);
  Eigen::JacobiSVD<Matrix> ss(perp);
  const auto k = static_cast<std::size_t>(x.cols());
  Vector c = cs.singularValues();              // descending cosines -> ascending angles
  Vector s = Vector::Zero(static_cast<Eigen::Index>(k));
  s.head(ss.singularValues().size()) = ss.singularValues();  // descending sines
  AngleReport rep;
  for (std::size_t j = 0; j < k; ++j) {
    const double cj = std::clamp(c(static_cast<Eigen::Index>(k - 1 - j)), 0.0, 1.0);
    const double sj = std::clamp(s(static_cast<Eigen::Index>(j)), 0.0, 1.0);
    rep.angles.push_back(std::atan2(sj, cj));
  }
  std::sort(rep.angles.begin(), rep.angles.end(), std::greater<>());
  rep.sin_max = std::clamp(s(0), 0.0, 1.0);
  return rep;
}

double subspace_sin(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("subspace_sin: row count mismatch");
  const Matrix qa = orthonormal_basis(a, "subspace_sin");
  const Matrix qb = orthonormal_basis(b, "subspace_sin");
  const Matrix perp = qb - qa * (qa.transpose() * qb);
  Eigen::JacobiSVD<Matrix> svd(perp);
  return std::min(1.0, svd.singularValues().size() ? svd.singularValues()(0) : 0.0);
}

double incoherence(const Matrix& a) {
  if (orthonormality_error(a) > 1e-8) throw std::invalid_argument("incoherence: factor is not orthonormal");
  const double row_max = a.rowwise().squaredNorm().maxCoeff();
  return row_max * static_cast<double>(a.rows()) / static_cast<double>(a.cols());
}

double sampling_threshold(std::span<const double> mu, std::span<const std::size_t> r,
                          std::span<const std::size_t> dims) {
  const std::size_t order = dims.size();
  if (mu.size() != order || r.size() != order)
    throw std::invalid_argument("sampling_threshold: length mismatch");
  double total = 1.0;
  for (auto d : dims) total *= static_cast<double>(d);
  double best = 0.0;
  for (std::size_t n = 0; n < order; ++n) {
    double term = 1.0;
    for (std::size_t k = 0; k < order; ++k)
      if (k != n) term *= mu[k] * static_cast<double>(r[k]) / static_cast<double>(dims[k]);
    best = std::max(best, term);
  }
  return (10.0 / 3.0) * (std::log(2.0 * total) + 5.0) * best;
}

CoreFit oracle_core_fit(const DenseTensor& t, std::span<const Matrix> factors) {
  if (factors.size() != t.order()) throw std::invalid_argument("oracle_core_fit: order mismatch");
  for (const auto& a : factors)
    if (orthonormality_error(a) > 1e-8) throw std::invalid_argument("oracle_core_fit: factor is not orthonormal");
  CoreFit f;
  f.x_opt = multi_mode_product(t, factors, Transpose::yes);
  f.error = fro_norm(multi_mode_product(f.x_opt, factors) - t);
  return f;
}

CoreFit restricted_core_fit(const DenseTensor& t, std::span<const Matrix> factors,
                            std::span<const std::uint64_t> linear) {
  const std::size_t order = t.order();
  if (factors.size() != order) throw std::invalid_argument("restricted_core_fit: order mismatch");
  Dims r;
  for (const auto& a : factors) r.push_back(static_cast<std::size_t>(a.cols()));
  const std::size_t nr = product(r);
  Matrix rows(static_cast<Eigen::Index>(linear.size()), static_cast<Eigen::Index>(nr));
  Vector rhs(static_cast<Eigen::Index>(linear.size()));
  std::vector<std::size_t> ix(order), jx(order);
  for (std::size_t e = 0; e < linear.size(); ++e) {
    t.multi_index(static_cast<std::size_t>(linear[e]), ix);
    rhs(static_cast<Eigen::Index>(e)) = t[static_cast<std::size_t>(linear[e])];
    // Row of A_N (x) ... (x) A_1 at the observed index; core index j_1 fastest.
    for (std::size_t c = 0; c < nr; ++c) {
      std::size_t rem = c;
      double v = 1.0;
      for (std::size_t k = 0; k < order; ++k) {
        jx[k] = rem % r[k];
        rem /= r[k];
        v *= factors[k](static_cast<Eigen::Index>(ix[k]), static_cast<Eigen::Index>(jx[k]));
      }
      rows(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(c)) = v;
    }
  }
  const Vector x = rows.colPivHouseholderQr().solve(rhs);
  CoreFit f;
  f.x_opt = DenseTensor(r, std::vector<double>(x.data(), x.data() + x.size()));
  f.error = fro_norm(multi_mode_product(f.x_opt, factors) - t);
  return f;
}

SandwichReport sandwich_test(const DenseTensor& t, std::span<const Matrix> factors, double p,
                             int trials, std::uint64_t seed) {
  SandwichReport rep;
  std::vector<double> mu;
  Dims r;
  for (const auto& a : factors) {
    mu.push_back(incoherence(a));
    r.push_back(static_cast<std::size_t>(a.cols()));
  }
  rep.p_star = sampling_threshold(mu, r, t.dims());
  rep.outside_regime = p < 4.0 * rep.p_star || p > 0.5;
  const double phi = oracle_core_fit(t, factors).error;
  const double upper = 3.0 / std::sqrt(2.0) + 0.01;
  for (int k = 0; k < trials; ++k) {
    const auto mask = sample_mask(t.dims(), p, derive_seed(seed, {0x73616e64ULL, static_cast<std::uint64_t>(k)}));
    const double psi = restricted_core_fit(t, factors, mask.linear).error;
    const double ratio = phi > 0.0 ? psi / phi : (psi == 0.0 ? 1.0 : kPsnrInfinity);
    rep.ratios.push_back(ratio);
    ++rep.trials;
    if (ratio >= 1.0 - 1e-10) ++rep.lower_ok;
    if (ratio >= 1.0 - 1e-10 && ratio <= upper) ++rep.in_band;
  }
  rep.fraction = rep.trials ? static_cast<double>(rep.in_band) / rep.trials : 0.0;
  return rep;
}

KronAngleCheck kron_angle_check(std::span<const Matrix> a, std::span<const Matrix> ahat) {
  if (a.empty() || a.size() != ahat.size()) throw std::invalid_argument("kron_angle_check: list length mismatch");
  double max_sin = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].rows() != ahat[k].rows() || a[k].cols() != ahat[k].cols())
      throw std::invalid_argument("kron_angle_check: shape mismatch");
    max_sin = std::max(max_sin, canonical_angles(a[k], ahat[k]).sin_max);
  }
  Matrix m = a[0], mh = ahat[0];
  for (std::size_t k = 1; k < a.size(); ++k) {
    m = kron(a[k], m);
    mh = kron(ahat[k], mh);
  }
  KronAngleCheck c;
  c.lhs = canonical_angles(m, mh).sin_max;
  c.rhs = std::pow(2.0, 0.5 * static_cast<double>(a.size() - 1)) * max_sin;
  c.holds = c.lhs <= c.rhs + 1e-10;
  return c;
}

double psnr(const DenseTensor& reference, const DenseTensor& test, double max_val) {
  if (reference.dims() != test.dims()) throw std::invalid_argument("psnr: dims mismatch");
  if (!(max_val > 0.0)) throw std::invalid_argument("psnr: max_val must be positive");
  double se = 0.0;
  for (std::size_t l = 0; l < reference.size(); ++l) {
    const double d = reference[l] - test[l];
    se += d * d;
  }
  const double mse = se / static_cast<double>(reference.size());
  if (mse == 0.0) return kPsnrInfinity;
  return 10.0 * std::log10(max_val * max_val / mse);
}

}  // namespace ttn
