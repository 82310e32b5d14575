#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ttn/diagram.hpp"
#include "ttn/tensor.hpp"

namespace ttn {

// X = [[G; A_1, ..., A_N]] with orthonormal A_n and G = contract(diagram, nodes).
struct TuckerWrappedModel {
  std::vector<Matrix> factors;
  TensorDiagram diagram;
  NodeTensorSet nodes;
  std::optional<DenseTensor> cached_core;

  std::size_t order() const { return factors.size(); }
  Dims dims() const;
  Dims ranks() const;
  // Cached core when present, otherwise a fresh contraction.
  DenseTensor core() const;
  void refresh_core();
  // Dense reconstruction of X.
  DenseTensor full() const;
};

// Violations of the model invariants (orthonormality to `orth_tol`, matching
// diagram/core/factor shapes); empty when valid.
std::vector<std::string> validate(const TuckerWrappedModel& model, double orth_tol = 1e-8);

double orthonormality_error(const Matrix& a);

}  // namespace ttn
