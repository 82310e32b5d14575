#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ttn/tensor.hpp"

namespace ttn {

struct TuckerWrappedModel;

// Index set Omega: strictly increasing column-major linear indices.
struct SampleMask {
  Dims dims;
  std::vector<std::uint64_t> linear;
  std::optional<double> p_nominal;
};

// Pi_Omega(T): observed entries with per-mode coordinates and row buckets.
class ObservationSet {
 public:
  ObservationSet(Dims dims, std::vector<std::uint64_t> linear, std::vector<double> values,
                 std::optional<double> p_nominal = std::nullopt);

  const Dims& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  std::size_t size() const { return linear_.size(); }
  bool empty() const { return linear_.empty(); }
  std::optional<double> p_nominal() const { return p_nominal_; }

  std::span<const std::uint64_t> linear() const { return linear_; }
  std::span<const double> values() const { return values_; }
  // Coordinate of every entry along mode n (0-based).
  std::span<const std::uint32_t> coords(std::size_t n) const { return coords_[n]; }

  // Entries whose mode-n coordinate equals i, as positions into linear()/values().
  std::span<const std::uint32_t> row(std::size_t n, std::size_t i) const;
  std::size_t row_count(std::size_t n, std::size_t i) const { return row(n, i).size(); }

  SampleMask mask() const { return {dims_, linear_, p_nominal_}; }
  double norm() const;

 private:
  Dims dims_;
  std::vector<std::uint64_t> linear_;
  std::vector<double> values_;
  std::optional<double> p_nominal_;
  std::vector<std::vector<std::uint32_t>> coords_;
  std::vector<std::vector<std::uint32_t>> row_start_;
  std::vector<std::vector<std::uint32_t>> row_entries_;
};

// Each linear index is included independently with probability p, decided by a
// hash of (seed, linear index).
SampleMask sample_mask(const Dims& dims, double p, std::uint64_t seed);

ObservationSet project(const DenseTensor& t, const SampleMask& mask);

// Values of a dense tensor at Omega, in mask order.
std::vector<double> gather(const DenseTensor& t, std::span<const std::uint64_t> linear);

// raw: ||Pi(X - T)||_F; normalized: raw / ||Pi(T)||_F.
double residual(std::span<const double> model_values, const ObservationSet& observed,
                bool normalized);

// (prod I_n / |Omega|) * Pi_Omega(T) as a dense tensor.
DenseTensor scaled_zero_fill(const ObservationSet& observed);

// Dense tensor holding `values` at Omega and zero elsewhere.
DenseTensor scatter(const Dims& dims, std::span<const std::uint64_t> linear,
                    std::span<const double> values);

// [[core; factors]] evaluated only at Omega. Chooses between per-entry
// contraction and a dense reconstruction by estimated cost.
std::vector<double> sampled_evaluate(const DenseTensor& core, std::span<const Matrix> factors,
                                     const SampleMask& mask);
std::vector<double> sampled_evaluate(const TuckerWrappedModel& model, const SampleMask& mask);

// Explicit strategies, exposed for testing.
std::vector<double> sampled_evaluate_entrywise(const DenseTensor& core,
                                               std::span<const Matrix> factors,
                                               const SampleMask& mask);
std::vector<double> sampled_evaluate_dense(const DenseTensor& core,
                                           std::span<const Matrix> factors,
                                           const SampleMask& mask);

// Text format: "dims: ...", "p: <float>", then "i1 ... iN value" lines, 1-based.
void write_observations(std::ostream& os, const ObservationSet& obs);
ObservationSet read_observations(std::istream& is);

}  // namespace ttn
