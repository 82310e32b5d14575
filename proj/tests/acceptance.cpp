// Acceptance runner: one PASS/FAIL line per criterion. Arguments select a
// subset of criteria by number; no arguments runs all of them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "support.hpp"
#include "ttn/analysis.hpp"
#include "ttn/experiment.hpp"
#include "ttn/init.hpp"
#include "ttn/kernels.hpp"
#include "ttn/solver.hpp"

using namespace ttn;
using namespace testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int worker_count() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string source_path(const std::string& rel) { return std::string(TTN_SOURCE_DIR) + "/" + rel; }

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Shared by criteria 1, 2 and 5: 30^3, rank 5, p = 0.3, d0 = r + 2, kappa = 100.
struct RecoveryBatch {
  std::vector<SyntheticRun> runs;
  double seconds = 0.0;
};

const RecoveryBatch& recovery_batch() {
  static const RecoveryBatch batch = [] {
    auto cfg = parse_config(nlohmann::json::parse(R"({
      "experiment": "synthetic", "dims": [30, 30, 30], "rank": 5, "p": 0.3, "trials": 20,
      "topology": "single", "d0_offset": 2, "seed": 2024,
      "solver": {"tol": 1e-4, "max_outer": 50, "kappa": 100}})"));
    RecoveryBatch b;
    const auto t0 = Clock::now();
    b.runs = run_synthetic_batch(cfg, worker_count());
    b.seconds = seconds_since(t0);
    return b;
  }();
  return batch;
}

bool converged(const SyntheticRun& r) {
  return r.error.empty() && !r.trace.records.empty() && r.trace.records.back().tau_norm <= 1e-4 &&
         r.trace.records.size() <= 50;
}

double run_ms(const SyntheticRun& r) {
  double ms = 0.0;
  for (const auto& rec : r.trace.records) ms += rec.wall_ms;
  return ms;
}

Outcome exact_recovery() {
  const auto& b = recovery_batch();
  int ok = 0;
  double worst_ms = 0.0;
  for (const auto& r : b.runs) {
    ok += converged(r);
    worst_ms = std::max(worst_ms, run_ms(r));
  }
  // Batch wall time bounds every run from above when it runs on one worker.
  const bool timely = worst_ms <= 60e3 && (worker_count() > 1 || b.seconds <= 60.0 * b.runs.size());
  return {ok >= 18 && timely, fmt("%d/20 runs reach tau <= 1e-4 within 50 iterations; slowest iteration loop %.2f s; batch %.1f s",
                                  ok, worst_ms / 1e3, b.seconds)};
}

Outcome linear_rate() {
  std::vector<double> ratios;
  std::vector<double> run_medians;
  for (const auto& r : recovery_batch().runs) {
    if (!converged(r)) continue;
    const auto& rec = r.trace.records;
    std::vector<double> mine;
    for (std::size_t t = rec.size() / 2; t + 1 < rec.size(); ++t)
      if (rec[t].tau_norm > 0.0) mine.push_back(rec[t + 1].tau_norm / rec[t].tau_norm);
    ratios.insert(ratios.end(), mine.begin(), mine.end());
    if (!mine.empty()) run_medians.push_back(median(mine));
  }
  const double med = median(ratios);
  double mean = 0.0, var = 0.0;
  for (double v : run_medians) mean += v / run_medians.size();
  for (double v : run_medians) var += (v - mean) * (v - mean) / run_medians.size();
  return {!ratios.empty() && med < 0.9,
          fmt("median tail ratio %.3f over %zu ratios; per-run medians mean %.3f, CV %.2f", med, ratios.size(), mean,
              mean > 0 ? std::sqrt(var) / mean : 0.0)};
}

Outcome monotone_trends() {
  auto cfg = parse_config(nlohmann::json::parse(R"({
    "experiment": "synthetic", "dims": [30, 30, 30], "rank": 5, "trials": 20, "seed": 77,
    "solver": {"tol": 1e-4, "max_outer": 50, "kappa": 100}})"));
  // Runs that never reach 1e-3 count as max_outer + 1.
  const auto mean_iters = [&](const std::vector<SyntheticRun>& runs) {
    double s = 0.0;
    for (const auto& r : runs) s += r.trace.iterations_to(1e-3).value_or(cfg.solver.max_outer + 1);
    return s / runs.size();
  };
  std::vector<double> by_p, by_r;
  for (double p : {0.1, 0.2, 0.3}) {
    auto c = cfg;
    c.p_grid = {p};
    c.r_grid = {5};
    by_p.push_back(mean_iters(run_synthetic_batch(c, worker_count())));
  }
  for (std::size_t r : {3, 5, 8}) {
    auto c = cfg;
    c.p_grid = {0.2};
    c.r_grid = {r};
    by_r.push_back(mean_iters(run_synthetic_batch(c, worker_count())));
  }
  const bool p_ok = by_p[0] >= by_p[1] && by_p[1] >= by_p[2];
  const bool r_ok = by_r[0] <= by_r[1] && by_r[1] <= by_r[2];
  return {p_ok && r_ok, fmt("mean iterations to 1e-3: p=0.1/0.2/0.3 -> %.2f %.2f %.2f; r=3/5/8 -> %.2f %.2f %.2f", by_p[0],
                            by_p[1], by_p[2], by_r[0], by_r[1], by_r[2])};
}

Outcome phase_shape() {
  const auto cfg = load_config(source_path("configs/phase.json"));
  const auto cells = phase_cells(cfg, run_synthetic_batch(cfg, worker_count()));
  std::map<std::pair<std::size_t, double>, double> rate;
  for (const auto& c : cells) rate[{c.r, c.p}] = c.rate();
  double worst_drop = 0.0;
  for (auto r : cfg.r_grid)
    for (std::size_t k = 1; k < cfg.p_grid.size(); ++k)
      worst_drop = std::max(worst_drop, rate[{r, cfg.p_grid[k - 1]}] - rate[{r, cfg.p_grid[k]}]);
  const double easy = rate[{3, 0.4}], hard = rate[{12, 0.05}];
  std::ostringstream grid;
  for (auto r : cfg.r_grid) {
    grid << " r" << r << ":";
    for (double p : cfg.p_grid) grid << ' ' << format_double(rate[{r, p}]);
  }
  return {easy >= 0.9 && hard <= 0.1 && worst_drop <= 0.15 + 1e-12,
          fmt("rate(3,0.4)=%.2f rate(12,0.05)=%.2f largest left-neighbour drop %.2f;", easy, hard, worst_drop) + grid.str()};
}

Outcome rank_revelation() {
  int conv = 0, exact = 0;
  for (const auto& r : recovery_batch().runs)
    if (converged(r)) {
      ++conv;
      exact += r.final_ranks == Dims{5, 5, 5};
    }
  return {conv > 0 && exact >= 0.9 * conv, fmt("d0 = (7,7,7): final ranks (5,5,5) in %d/%d converged runs", exact, conv)};
}

Outcome algebra() {
  bool fold_ok = true;
  double kron_worst = 0.0, hosvd_worst = 0.0, absorb_worst = 0.0, trunc_worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    CounterRng rng(derive_seed(9001, {s}));
    const std::size_t order = 2 + rng.below(3);
    Dims dims, rows;
    std::vector<Matrix> a;
    for (std::size_t k = 0; k < order; ++k) {
      dims.push_back(1 + rng.below(5));
      rows.push_back(1 + rng.below(5));
      a.push_back(random_matrix(rows.back(), dims.back(), derive_seed(s, {k, 1})));
    }
    const auto t = random_tensor(dims, derive_seed(s, {2}));
    for (std::size_t n = 0; n < order; ++n) fold_ok = fold_ok && fold(unfold(t, n), n, dims) == t;
    // X_(n) = A_n T_(n) (kron of the others)^T, where X is built entry by entry.
    const auto x = naive_tucker(t, a);
    for (std::size_t n = 0; n < order; ++n) {
      const Matrix rhs = a[n] * unfold(t, n) * kron_except(a, n).transpose();
      kron_worst = std::max(kron_worst, (unfold(x, n) - rhs).norm() / std::max(unfold(x, n).norm(), 1e-300));
    }
    const auto h = hosvd(t);
    hosvd_worst = std::max(hosvd_worst, rel_diff(naive_tucker(h.core, h.factors), t));
  }
  // Low multilinear rank: economic HOSVD must find the rank and still reconstruct.
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Dims r{2, 3, 2};
    const std::vector<Matrix> a{random_matrix(7, 2, s * 10 + 1), random_matrix(6, 3, s * 10 + 2), random_matrix(5, 2, s * 10 + 3)};
    const auto t = naive_tucker(random_tensor(r, s * 10 + 4), a);
    const auto h = hosvd(t);
    hosvd_worst = std::max(hosvd_worst, rel_diff(naive_tucker(h.core, h.factors), t));
    if (h.core.dims() != r) hosvd_worst = std::max(hosvd_worst, 1.0);
  }
  const Dims dims{7, 6, 5};
  for (auto kind : {Topology::single, Topology::cp, Topology::tt, Topology::tr}) {
    const std::vector<std::size_t> w = kind == Topology::single ? std::vector<std::size_t>{}
                                       : kind == Topology::cp   ? std::vector<std::size_t>{3}
                                       : kind == Topology::tt   ? std::vector<std::size_t>{2, 3}
                                                                : std::vector<std::size_t>{2, 2, 3};
    TuckerWrappedModel m;
    m.diagram = make_topology(kind, 3, w, {3, 3, 2});
    for (std::size_t k = 0; k < m.diagram.node_count(); ++k)
      m.nodes.push_back(random_tensor(m.diagram.node_shape(k), 500 + k));
    for (std::size_t n = 0; n < 3; ++n)
      m.factors.push_back(random_orthonormal(dims[n], m.diagram.outgoing_weights()[n], 510 + n));
    m.refresh_core();
    for (std::size_t n = 0; n < 3; ++n) {
      const Matrix x = random_matrix(dims[n], m.factors[n].cols(), 520 + n);
      auto with_x = m;
      with_x.factors[n] = x;
      const auto before = naive_tucker(contract(with_x.diagram, with_x.nodes), with_x.factors);
      orthonormalize_and_absorb(m, n, x);
      absorb_worst = std::max(absorb_worst, rel_diff(naive_tucker(contract(m.diagram, m.nodes), m.factors), before));
    }
    const auto before = m.full();
    auto keep = m;
    truncate_ranks(keep, {1e16});
    trunc_worst = std::max(trunc_worst, rel_diff(keep.full(), before));
    if (keep.ranks() != m.ranks()) trunc_worst = std::max(trunc_worst, 1.0);
  }
  return {fold_ok && kron_worst <= 1e-10 && hosvd_worst <= 1e-10 && absorb_worst <= 1e-10 && trunc_worst <= 1e-10,
          fmt("fold/unfold bit-exact: %s; Kronecker %.1e; HOSVD %.1e; QR absorb %.1e; no-op truncation %.1e",
              fold_ok ? "yes" : "no", kron_worst, hosvd_worst, absorb_worst, trunc_worst)};
}

Matrix perturbed_basis(const Matrix& q, double eps, std::uint64_t seed) {
  const Matrix m = q + eps * random_matrix(q.rows(), q.cols(), seed);
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

Outcome sandwich() {
  const auto t0 = Clock::now();
  const auto prob = make_synthetic({12, 12, 12}, {2, 2, 2}, 1.0, 4242);
  // Estimated factors near the planted ones, as in a late solver iterate.
  std::vector<Matrix> f;
  for (std::size_t n = 0; n < 3; ++n) f.push_back(perturbed_basis(prob.basis[n], 0.2, 4300 + n));
  const auto rep = sandwich_test(prob.truth, f, 0.5, 200, 4400);
  const double secs = seconds_since(t0);
  const auto [lo, hi] = std::minmax_element(rep.ratios.begin(), rep.ratios.end());
  return {rep.in_band >= 190 && rep.lower_ok == 200 && secs <= 120.0,
          fmt("%d/200 ratios in band, %d/200 satisfy psi >= phi, range [%.4f, %.4f], %.1f s", rep.in_band, rep.lower_ok,
              *lo, *hi, secs)};
}

Outcome kron_angles() {
  std::string detail;
  bool all = true;
  for (std::size_t order : {2, 3, 4}) {
    int holds = 0;
    double tightest = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      CounterRng rng(derive_seed(31337, {order, s}));
      // Perturbation sizes span near-identical to unrelated subspaces.
      const double eps = std::pow(10.0, -3.0 + 4.0 * rng.uniform());
      std::vector<Matrix> a, ahat;
      for (std::size_t k = 0; k < order; ++k) {
        const std::size_t rows = 3 + rng.below(3), cols = 1 + rng.below(2);
        a.push_back(random_orthonormal(rows, cols, derive_seed(s, {order, k, 1})));
        ahat.push_back(perturbed_basis(a.back(), eps, derive_seed(s, {order, k, 2})));
      }
      const auto c = kron_angle_check(a, ahat);
      holds += c.holds && c.lhs <= c.rhs * (1 + 1e-12);
      if (c.rhs > 0) tightest = std::max(tightest, c.lhs / c.rhs);
    }
    all = all && holds == 100;
    detail += fmt("N=%zu: %d/100 (max lhs/rhs %.3f) ", order, holds, tightest);
  }
  return {all, detail};
}

Outcome inpainting() {
  auto cfg = load_config(source_path("configs/inpaint.json"));
  cfg.topologies = {"single", "tt"};
  cfg.trials = 10;
  const auto batch = run_inpainting_batch(cfg, worker_count());
  std::map<std::string, std::vector<double>> psnr;
  std::map<std::string, std::vector<bool>> ok;
  for (const auto& r : batch.runs) {
    psnr[r.topology].push_back(r.psnr);
    ok[r.topology].push_back(r.error.empty());
  }
  int wins = 0;
  double mean_single = 0, mean_tt = 0;
  for (int t = 0; t < cfg.trials; ++t) {
    // A run that threw never counts in favour of the ordering.
    wins += ok["tt"][t] && ok["single"][t] && psnr["tt"][t] >= psnr["single"][t] + 1.0;
    mean_single += psnr["single"][t] / cfg.trials;
    mean_tt += psnr["tt"][t] / cfg.trials;
  }
  return {wins >= 7, fmt("tt beats single by >= 1 dB in %d/10 seeds; mean PSNR single %.2f dB, tt %.2f dB", wins,
                         mean_single, mean_tt)};
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") {
      std::ifstream f(e.path(), std::ios::binary);
      std::ostringstream ss;
      ss << f.rdbuf();
      out[fs::relative(e.path(), dir).string()] = ss.str();
    }
  return out;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "ttn_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto phase = parse_config(nlohmann::json::parse(R"({
    "experiment": "phase", "dims": [15, 15, 15], "r_grid": [2, 4], "p_grid": [0.1, 0.3], "trials": 4, "seed": 5,
    "solver": {"max_outer": 20, "kappa": 100}})"));
  const auto synth = parse_config(nlohmann::json::parse(R"({
    "experiment": "synthetic", "dims": [12, 12, 12], "rank": 2, "p": 0.3, "trials": 4, "topology": "tt", "seed": 6,
    "d0_offset": 1, "solver": {"max_outer": 20, "factor_strategy": {"kind": "subsampled", "c": 2}}})"));
  // Small deterministic image with some texture.
  Image img;
  img.height = 12;
  img.width = 10;
  for (std::size_t k = 0; k < 12 * 10 * 3; ++k) img.samples.push_back(static_cast<std::uint8_t>((k * 37 + (k / 7) * 11) % 256));
  save_ppm((root / "img.ppm").string(), img);
  auto inpaint = parse_config(nlohmann::json{{"experiment", "inpaint"}, {"image", (root / "img.ppm").string()}, {"p", 0.6},
                                             {"topologies", {"single", "tr"}}, {"w", 2}, {"trials", 2}, {"seed", 7},
                                             {"solver", {{"max_outer", 10}}}});
  int files = 0, identical = 0;
  for (const int threads : {1, 8}) {
    const auto dir = root / std::to_string(threads);
    write_synthetic_outputs((dir / "phase").string(), phase, run_synthetic_batch(phase, threads), false);
    write_synthetic_outputs((dir / "synth").string(), synth, run_synthetic_batch(synth, threads), false);
    write_inpaint_outputs((dir / "inpaint").string(), inpaint, run_inpainting_batch(inpaint, threads), false);
  }
  const auto one = csv_files(root / "1"), eight = csv_files(root / "8");
  for (const auto& [name, body] : one) {
    ++files;
    const auto it = eight.find(name);
    identical += it != eight.end() && it->second == body;
  }
  fs::remove_all(root);
  return {files > 0 && identical == files && one.size() == eight.size(),
          fmt("%d/%d CSV files byte-identical between 1 and 8 threads", identical, files)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "exact recovery", exact_recovery},     {2, "linear rate", linear_rate},
      {3, "monotone trends", monotone_trends},   {4, "phase transition shape", phase_shape},
      {5, "rank revelation", rank_revelation},   {6, "algebra suite", algebra},
      {7, "sandwich bound", sandwich},           {8, "Kronecker angle bound", kron_angles},
      {9, "inpainting ordering", inpainting},    {10, "determinism across threads", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  std::printf("kernels: %s, workers: %d\n", std::string(kernels::isa_name(kernels::active_isa())).c_str(), worker_count());
  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
