#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ttn/diagram.hpp"
#include "ttn/model.hpp"
#include "ttn/observation.hpp"

namespace ttn {

struct DirectRowwise {};
struct SubsampledRowwise {
  double c = 3.0;
};
struct IterativeFactor {
  int max_mv = 200;
  double atol = 1e-10;
};
using FactorStrategy = std::variant<DirectRowwise, SubsampledRowwise, IterativeFactor>;

std::string strategy_name(const FactorStrategy& s);

struct SolverConfig {
  Dims d0;
  std::vector<double> kappa;  // one bound per mode, or a single value for all
  double tol = 1e-4;
  int max_outer = 50;
  double inner_tol = 1e-3;
  int inner_max = 10;
  FactorStrategy factor_strategy = DirectRowwise{};
  std::uint64_t seed = 0;

  // LSQR limits for each node update.
  int node_lsqr_max = 100;
  double node_lsqr_tol = 1e-10;
  // Initialization (HOOI + node fitting).
  double init_tol = 1e-2;
  int init_max = 20;

  double kappa_for(std::size_t n) const;
  // Empty when valid.
  std::vector<std::string> check() const;
};

enum class SolveStatus { converged, max_outer, diverged };
std::string to_string(SolveStatus s);

struct TraceRecord {
  int iter = 0;
  double tau_raw = 0.0;
  double tau_norm = 0.0;
  Dims ranks;
  int inner_sweeps = 0;
  double wall_ms = 0.0;
  std::vector<double> sin_theta;  // empty without ground truth
  int empty_rows = 0;             // factor rows kept for lack of observations
  int flags = 0;                  // degenerate QR / zero CP column events
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  double init_tau_norm = 0.0;
  std::vector<double> init_sin_theta;
  SolveStatus status = SolveStatus::max_outer;

  // First iteration whose normalized residual is below `level`.
  std::optional<int> iterations_to(double level) const;
};

// Writes the trace CSV. wall_ms is left empty unless with_timing is set, which
// keeps output byte-identical across runs.
void write_trace_csv(std::ostream& os, const SolverTrace& trace, bool with_timing = false);

struct FactorUpdate {
  Matrix x;
  std::vector<std::size_t> kept_rows;  // no usable observations; previous values kept
};

// Per-mode LLS of the factor against the current core and all other factors.
// `iteration` and `seed` key the subsampling.
FactorUpdate update_factor(const TuckerWrappedModel& model, const ObservationSet& observed,
                           std::size_t n, const FactorStrategy& strategy, int iteration,
                           std::uint64_t seed);

// X = QR; A_n <- Q and R is absorbed into the node carrying mode n. Returns
// true when X was rank deficient (pivoted QR, zero diagonal lifted to eps*||X||).
bool orthonormalize_and_absorb(TuckerWrappedModel& model, std::size_t n, const Matrix& x);

struct NodeUpdateInfo {
  int sweeps = 0;
  int zero_columns = 0;
  std::vector<double> objective;  // ||Pi(X - T)|| after each node update
};

NodeUpdateInfo update_nodes(TuckerWrappedModel& model, const ObservationSet& observed,
                            double inner_tol, int inner_max, int lsqr_max = 100,
                            double lsqr_tol = 1e-10);

// s_n = #{j : sigma_1 <= kappa_n sigma_j} of G_(n); modes with s_n < r_n are
// cut to their leading s_n singular vectors. Repeats until no mode changes, so
// cond(G_(n)) <= kappa_n holds for all n afterwards. Returns true if any rank changed.
bool truncate_ranks(TuckerWrappedModel& model, const std::vector<double>& kappa);

struct SolveResult {
  TuckerWrappedModel model;
  SolverTrace trace;
};

// ground_truth: planted factors, used only for the sin(theta) columns.
SolveResult solve(const ObservationSet& observed, const TensorDiagram& diagram,
                  const SolverConfig& config,
                  const std::vector<Matrix>* ground_truth = nullptr);

}  // namespace ttn
