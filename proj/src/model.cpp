#include "ttn/model.hpp"

namespace ttn {

Dims TuckerWrappedModel::dims() const {
  Dims d;
  for (const auto& a : factors) d.push_back(static_cast<std::size_t>(a.rows()));
  return d;
}

Dims TuckerWrappedModel::ranks() const {
  Dims r;
  for (const auto& a : factors) r.push_back(static_cast<std::size_t>(a.cols()));
  return r;
}

DenseTensor TuckerWrappedModel::core() const {
  if (cached_core) return *cached_core;
  return contract(diagram, nodes);
}

void TuckerWrappedModel::refresh_core() { cached_core = contract(diagram, nodes); }

DenseTensor TuckerWrappedModel::full() const { return multi_mode_product(core(), factors); }

double orthonormality_error(const Matrix& a) {
  const Matrix g = a.transpose() * a;
  return (g - Matrix::Identity(g.rows(), g.cols())).norm();
}

std::vector<std::string> validate(const TuckerWrappedModel& m, double orth_tol) {
  auto v = validate(m.diagram, m.nodes);
  if (m.factors.size() != m.diagram.order()) {
    v.push_back("factor count does not match diagram order");
    return v;
  }
  const Dims d = m.diagram.outgoing_weights();
  for (std::size_t n = 0; n < m.factors.size(); ++n) {
    if (static_cast<std::size_t>(m.factors[n].cols()) != d[n])
      v.push_back("factor " + std::to_string(n + 1) + " column count differs from d");
    if (orthonormality_error(m.factors[n]) > orth_tol)
      v.push_back("factor " + std::to_string(n + 1) + " is not orthonormal");
  }
  if (m.cached_core && m.cached_core->dims() != d) v.push_back("cached core shape differs from d");
  return v;
}

}  // namespace ttn
