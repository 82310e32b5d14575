#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttn/image.hpp"
#include "ttn/observation.hpp"
#include "ttn/solver.hpp"

namespace ttn {

enum class ExperimentKind { synthetic, phase, inpaint };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::synthetic;
  Dims dims{30, 30, 30};
  Dims rank{5, 5, 5};               // planted rank; r_grid entries replace it uniformly
  std::vector<double> p_grid{0.3};  // "p" is accepted for a single value
  std::vector<std::size_t> r_grid;  // empty: just `rank`
  int trials = 1;
  std::vector<std::string> topologies{"single"};  // "topology" for a single value
  std::vector<std::size_t> w;       // internal weights; empty picks the kind's default
  SolverConfig solver;              // solver.d0 empty: planted rank + d0_offset (or inpaint default)
  std::size_t d0_offset = 0;
  std::uint64_t seed = 1;
  std::string image;
  double success_threshold = 1e-2;
  nlohmann::json source;            // config as read, echoed into the manifest

  std::vector<std::string> check() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
SolverConfig parse_solver_config(const nlohmann::json& j);
nlohmann::json solver_config_to_json(const SolverConfig& c);

// T = [[G; A_1..A_N]] with standard-normal G and A, observed at rate p.
struct SyntheticProblem {
  DenseTensor truth;
  std::vector<Matrix> basis;  // orthonormal bases of the planted factors
  ObservationSet observed;
};
SyntheticProblem make_synthetic(const Dims& dims, const Dims& rank, double p, std::uint64_t seed);

// Seed of run (cell, trial) derived from the master seed.
std::uint64_t run_seed(std::uint64_t master, std::size_t r, double p, int trial);

struct SyntheticRun {
  std::size_t r = 0;
  double p = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  SolverTrace trace;
  Dims final_ranks;
  double recovery_error = 0.0;  // ||X - T||_F / ||T||_F
  bool success = false;         // tau_Omega and recovery error both below the threshold
  std::string error;            // non-empty if the run threw
};

// One run per (r, p, trial), executed on `threads` workers; result order is fixed.
std::vector<SyntheticRun> run_synthetic_batch(const ExperimentConfig& cfg, int threads);

struct PhaseCell {
  std::size_t r = 0;
  double p = 0.0;
  int successes = 0;
  int trials = 0;
  double rate() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
};
std::vector<PhaseCell> phase_cells(const ExperimentConfig& cfg, const std::vector<SyntheticRun>& runs);

struct InpaintRun {
  std::string topology;
  int trial = 0;
  std::uint64_t seed = 0;
  double psnr = 0.0;
  SolverTrace trace;
  Dims final_ranks;
  Image recovered;
  Image observed;
  std::string error;
};

struct InpaintBatch {
  ReshapePlan plan;
  Image original;
  std::vector<InpaintRun> runs;  // topology-major, then trial
};

InpaintBatch run_inpainting_batch(const ExperimentConfig& cfg, int threads);
// Default order-5 solver ranks (8,8,8,8,3) capped by the tensor dims.
Dims default_inpaint_d0(const Dims& dims);

// Files written into out_dir; wall_ms is included only with `timing`.
void write_synthetic_outputs(const std::string& out_dir, const ExperimentConfig& cfg,
                             const std::vector<SyntheticRun>& runs, bool timing);
void write_phase_csv(std::ostream& os, const std::vector<PhaseCell>& cells);
void write_inpaint_outputs(const std::string& out_dir, const ExperimentConfig& cfg,
                           const InpaintBatch& batch, bool timing);
void write_manifest(const std::string& out_dir, const ExperimentConfig& cfg);

std::string version_string();

// Runs `count` jobs on up to `threads` workers; job(i) must only touch slot i.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job);

}  // namespace ttn
