#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ttn/diagram.hpp"
#include "ttn/model.hpp"
#include "ttn/observation.hpp"
#include "ttn/tensor.hpp"

namespace ttn {

struct HosvdResult {
  DenseTensor core;
  std::vector<Matrix> factors;
  std::vector<Vector> singular_values;  // full spectrum of each unfolding
};

// Economic when `ranks` is empty: r_n counts sigma_j > max(dims) * eps * sigma_1,
// at least 1. Otherwise the leading ranks[n] left singular vectors.
HosvdResult hosvd(const DenseTensor& t, const std::optional<Dims>& ranks = std::nullopt);

// Leading r left singular vectors of m (n x r, orthonormal); singular values to s if given.
Matrix leading_left_singular(const Matrix& m, std::size_t r, Vector* s = nullptr);

struct MultilinearApprox {
  DenseTensor core;
  std::vector<Matrix> factors;
  std::vector<double> objective;  // ||T - [[core; factors]]||_F after each sweep (entry 0: HOSVD start)
  int sweeps = 0;
};

// HOOI seeded from the truncated HOSVD.
MultilinearApprox best_multilinear_approx(const DenseTensor& t, const Dims& ranks, double tol,
                                          int max_iters);

struct NodeFit {
  NodeTensorSet nodes;
  std::vector<double> error;  // relative fit error ||G - G0|| / ||G0|| after each node update
  int sweeps = 0;
};

// Node-wise ALS of ||contract(diagram, nodes) - g0||_F. Nodes are visited in
// ascending order; each update is an exact dense LLS. Stops once the relative
// error is below tol, the relative decrease over a sweep is below tol, or
// after max_iters sweeps. `seed` drives the padding of rank-deficient starts.
NodeFit fit_node_tensors(const TensorDiagram& diagram, const DenseTensor& g0, double tol,
                         int max_iters, std::uint64_t seed = 0);

// HOOI of the scaled zero-fill at ranks d0 followed by node fitting. The
// diagram's outgoing weights are replaced by d0.
TuckerWrappedModel initialize(const ObservationSet& observed, TensorDiagram diagram, const Dims& d0,
                              double tol, int max_iters = 20, std::uint64_t seed = 0);

}  // namespace ttn
