#pragma once

// LSQR (Paige & Saunders bidiagonalization) for min ||A x - b||_2 with A given
// only through the products A v and A^T u.

#include <cmath>

#include "ttn/tensor.hpp"

namespace ttn {

struct LsqrOptions {
  double atol = 1e-10;
  double btol = 1e-10;
  int max_iters = 100;
};

struct LsqrResult {
  Vector x;
  int iterations = 0;
  double rnorm = 0.0;   // estimate of ||b - A x||
  double arnorm = 0.0;  // estimate of ||A^T (b - A x)||
  bool converged = false;
};

// fwd(const Vector& v) -> Vector of size b.size(); adj(const Vector& u) -> Vector of size n.
template <class Fwd, class Adj>
LsqrResult lsqr(Fwd&& fwd, Adj&& adj, const Vector& b, Eigen::Index n, const LsqrOptions& opt = {}) {
  LsqrResult res;
  res.x = Vector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  Vector u = b / bnorm;
  Vector v = adj(u);
  double alpha = v.norm();
  if (alpha == 0.0) {
    res.rnorm = bnorm;
    res.converged = true;
    return res;
  }
  v /= alpha;
  Vector w = v;
  double phibar = bnorm, rhobar = alpha;
  double anorm_sq = 0.0;
  res.rnorm = bnorm;
  res.arnorm = alpha * bnorm;

  for (int it = 1; it <= opt.max_iters; ++it) {
    res.iterations = it;
    u = fwd(v) - alpha * u;
    double beta = u.norm();
    if (beta > 0.0) u /= beta;
    anorm_sq += alpha * alpha + beta * beta;
    v = adj(u) - beta * v;
    alpha = v.norm();
    if (alpha > 0.0) v /= alpha;

    const double rho = std::hypot(rhobar, beta);
    const double c = rhobar / rho, s = beta / rho;
    const double theta = s * alpha;
    rhobar = -c * alpha;
    const double phi = c * phibar;
    phibar = s * phibar;
    res.x += (phi / rho) * w;
    w = v - (theta / rho) * w;

    const double anorm = std::sqrt(anorm_sq);
    res.rnorm = phibar;
    res.arnorm = phibar * alpha * std::abs(c);
    const double xnorm = res.x.norm();
    if (res.rnorm <= opt.btol * bnorm + opt.atol * anorm * xnorm ||
        res.arnorm <= opt.atol * anorm * res.rnorm || alpha == 0.0) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace ttn
