#include "ttn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ttn/analysis.hpp"
#include "ttn/diagram.hpp"
#include "ttn/kernels.hpp"
#include "ttn/rng.hpp"

namespace ttn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kTagMask = 0x6d61736bULL;   // "mask"
constexpr std::uint64_t kTagCore = 0x636f7265ULL;   // "core"
constexpr std::uint64_t kTagFactor = 0x66616374ULL; // "fact"
constexpr std::uint64_t kTagSolver = 0x736f6c76ULL; // "solv"
constexpr std::uint64_t kTagInpaint = 0x696e7061ULL;

[[noreturn]] void bad(const std::string& what) { throw std::invalid_argument("config: " + what); }

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
      bad(std::string("unknown key '") + it.key() + "' in " + where);
  }
}

std::size_t as_size(const json& v, const char* key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) bad(std::string(key) + " must be a non-negative integer");
  return v.get<std::size_t>();
}

double as_double(const json& v, const char* key) {
  if (!v.is_number()) bad(std::string(key) + " must be a number");
  return v.get<double>();
}

Dims as_dims(const json& v, const char* key) {
  if (!v.is_array()) bad(std::string(key) + " must be an array");
  Dims d;
  for (const auto& e : v) d.push_back(as_size(e, key));
  return d;
}

std::vector<double> as_doubles(const json& v, const char* key) {
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(as_double(e, key));
  } else {
    out.push_back(as_double(v, key));
  }
  return out;
}

std::vector<std::string> as_strings(const json& v, const char* key) {
  std::vector<std::string> out;
  auto one = [&](const json& e) {
    if (!e.is_string()) bad(std::string(key) + " entries must be strings");
    out.push_back(e.get<std::string>());
  };
  if (v.is_array()) {
    for (const auto& e : v) one(e);
  } else {
    one(v);
  }
  return out;
}

FactorStrategy parse_strategy(const json& v) {
  std::string kind;
  json params = json::object();
  if (v.is_string()) {
    kind = v.get<std::string>();
  } else if (v.is_object()) {
    reject_unknown(v, {"kind", "c", "max_mv", "atol"}, "factor_strategy");
    if (!v.contains("kind") || !v["kind"].is_string()) bad("factor_strategy.kind must be a string");
    kind = v["kind"].get<std::string>();
    params = v;
  } else {
    bad("factor_strategy must be a string or object");
  }
  if (kind == "direct" || kind == "direct_rowwise") return DirectRowwise{};
  if (kind == "subsampled" || kind == "subsampled_rowwise") {
    SubsampledRowwise s;
    if (params.contains("c")) s.c = as_double(params["c"], "c");
    return s;
  }
  if (kind == "iterative") {
    IterativeFactor s;
    if (params.contains("max_mv")) s.max_mv = static_cast<int>(as_size(params["max_mv"], "max_mv"));
    if (params.contains("atol")) s.atol = as_double(params["atol"], "atol");
    return s;
  }
  bad("unknown factor_strategy '" + kind + "'");
}

json strategy_to_json(const FactorStrategy& s) {
  json j;
  j["kind"] = strategy_name(s);
  if (const auto* p = std::get_if<SubsampledRowwise>(&s)) j["c"] = p->c;
  if (const auto* p = std::get_if<IterativeFactor>(&s)) {
    j["max_mv"] = p->max_mv;
    j["atol"] = p->atol;
  }
  return j;
}

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::synthetic: return "synthetic";
    case ExperimentKind::phase: return "phase";
    case ExperimentKind::inpaint: return "inpaint";
  }
  return "synthetic";
}

std::string join(const Dims& d, char sep = '|') {
  std::string s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) s.push_back(sep);
    s += std::to_string(d[i]);
  }
  return s;
}

Dims uniform_rank(std::size_t r, std::size_t order) { return Dims(order, r); }

std::vector<std::size_t> cell_ranks(const ExperimentConfig& cfg) {
  if (!cfg.r_grid.empty()) return cfg.r_grid;
  return {cfg.rank.empty() ? 0 : cfg.rank.front()};
}

// Planted rank of a cell: r_grid values apply to every mode.
Dims planted_rank(const ExperimentConfig& cfg, std::size_t r) {
  return cfg.r_grid.empty() ? cfg.rank : uniform_rank(r, cfg.dims.size());
}

Dims capped(Dims d, const Dims& dims) {
  for (std::size_t n = 0; n < d.size() && n < dims.size(); ++n) d[n] = std::min(d[n], dims[n]);
  return d;
}

std::vector<std::size_t> default_weights(Topology kind, std::size_t order, std::size_t w) {
  switch (kind) {
    case Topology::single: return {};
    case Topology::cp: return {w};
    case Topology::tt: return std::vector<std::size_t>(order - 1, w);
    case Topology::tr: return std::vector<std::size_t>(order, w);
    case Topology::custom: break;
  }
  throw std::invalid_argument("experiment: custom topology needs an explicit diagram");
}

TensorDiagram build_diagram(const std::string& topology, const ExperimentConfig& cfg, const Dims& d0,
                            std::size_t default_w) {
  const Topology kind = parse_topology(topology);
  const std::size_t order = d0.size();
  std::vector<std::size_t> w = cfg.w;
  if (w.empty()) {
    w = default_weights(kind, order, default_w);
  } else if (w.size() == 1 && kind != Topology::cp && kind != Topology::single) {
    w = default_weights(kind, order, w.front());
  }
  if (kind == Topology::single) w.clear();
  return make_topology(kind, order, w, d0);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir + "'");
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string final_tau(const SolverTrace& t) {
  return t.records.empty() ? format_double(t.init_tau_norm) : format_double(t.records.back().tau_norm);
}

}  // namespace

std::vector<std::string> ExperimentConfig::check() const {
  std::vector<std::string> v;
  if (dims.empty()) v.push_back("dims must be nonempty");
  for (auto d : dims)
    if (d == 0) v.push_back("dims entries must be positive");
  if (kind != ExperimentKind::inpaint) {
    if (rank.size() != dims.size() && r_grid.empty()) v.push_back("rank length must equal the order");
    for (std::size_t n = 0; n < rank.size() && n < dims.size(); ++n)
      if (rank[n] == 0 || rank[n] > dims[n]) v.push_back("rank entries must lie in [1, dims]");
    for (auto r : r_grid)
      for (auto d : dims)
        if (r == 0 || r > d) v.push_back("r_grid entries must lie in [1, min dims]");
  }
  if (p_grid.empty()) v.push_back("p grid must be nonempty");
  for (double p : p_grid)
    if (!(p > 0.0 && p <= 1.0)) v.push_back("p must lie in (0, 1]");
  if (kind == ExperimentKind::phase && r_grid.empty()) v.push_back("phase experiments need r_grid");
  if (kind == ExperimentKind::inpaint) {
    if (image.empty()) v.push_back("inpaint experiments need an image path");
    if (p_grid.size() != 1) v.push_back("inpaint experiments take a single p");
  }
  if (trials < 1) v.push_back("trials must be >= 1");
  if (topologies.empty()) v.push_back("topologies must be nonempty");
  for (const auto& t : topologies) {
    try {
      if (parse_topology(t) == Topology::custom) v.push_back("custom topology is not supported by the harness");
    } catch (const std::exception&) {
      v.push_back("unknown topology '" + t + "'");
    }
  }
  for (auto x : w)
    if (x == 0) v.push_back("w entries must be positive");
  if (!(success_threshold > 0.0)) v.push_back("success_threshold must be positive");
  for (auto& s : solver.check()) v.push_back(s);
  return v;
}

SolverConfig parse_solver_config(const json& j) {
  if (!j.is_object()) bad("solver must be an object");
  reject_unknown(j, {"d0", "kappa", "tol", "max_outer", "inner_tol", "inner_max", "factor_strategy", "seed",
                     "node_lsqr_max", "node_lsqr_tol", "init_tol", "init_max"},
                 "solver");
  SolverConfig c;
  if (j.contains("d0")) c.d0 = as_dims(j["d0"], "d0");
  if (j.contains("kappa")) c.kappa = as_doubles(j["kappa"], "kappa");
  if (j.contains("tol")) c.tol = as_double(j["tol"], "tol");
  if (j.contains("max_outer")) c.max_outer = static_cast<int>(as_size(j["max_outer"], "max_outer"));
  if (j.contains("inner_tol")) c.inner_tol = as_double(j["inner_tol"], "inner_tol");
  if (j.contains("inner_max")) c.inner_max = static_cast<int>(as_size(j["inner_max"], "inner_max"));
  if (j.contains("factor_strategy")) c.factor_strategy = parse_strategy(j["factor_strategy"]);
  if (j.contains("seed")) c.seed = as_size(j["seed"], "seed");
  if (j.contains("node_lsqr_max")) c.node_lsqr_max = static_cast<int>(as_size(j["node_lsqr_max"], "node_lsqr_max"));
  if (j.contains("node_lsqr_tol")) c.node_lsqr_tol = as_double(j["node_lsqr_tol"], "node_lsqr_tol");
  if (j.contains("init_tol")) c.init_tol = as_double(j["init_tol"], "init_tol");
  if (j.contains("init_max")) c.init_max = static_cast<int>(as_size(j["init_max"], "init_max"));
  return c;
}

json solver_config_to_json(const SolverConfig& c) {
  json j;
  j["d0"] = c.d0;
  j["kappa"] = c.kappa;
  j["tol"] = c.tol;
  j["max_outer"] = c.max_outer;
  j["inner_tol"] = c.inner_tol;
  j["inner_max"] = c.inner_max;
  j["factor_strategy"] = strategy_to_json(c.factor_strategy);
  j["seed"] = c.seed;
  j["node_lsqr_max"] = c.node_lsqr_max;
  j["node_lsqr_tol"] = c.node_lsqr_tol;
  j["init_tol"] = c.init_tol;
  j["init_max"] = c.init_max;
  return j;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) bad("top level must be an object");
  reject_unknown(j, {"experiment", "dims", "rank", "p", "p_grid", "r_grid", "trials", "topology", "topologies", "w",
                     "solver", "d0_offset", "seed", "image", "success_threshold"},
                 "config");
  ExperimentConfig c;
  c.source = j;
  if (j.contains("experiment")) {
    if (!j["experiment"].is_string()) bad("experiment must be a string");
    const auto k = j["experiment"].get<std::string>();
    if (k == "synthetic" || k == "synth") c.kind = ExperimentKind::synthetic;
    else if (k == "phase") c.kind = ExperimentKind::phase;
    else if (k == "inpaint") c.kind = ExperimentKind::inpaint;
    else bad("unknown experiment '" + k + "'");
  }
  if (j.contains("dims")) c.dims = as_dims(j["dims"], "dims");
  if (j.contains("rank")) {
    if (j["rank"].is_array()) c.rank = as_dims(j["rank"], "rank");
    else c.rank = uniform_rank(as_size(j["rank"], "rank"), c.dims.size());
  } else if (c.rank.size() != c.dims.size()) {
    c.rank = uniform_rank(std::min<std::size_t>(5, *std::min_element(c.dims.begin(), c.dims.end())), c.dims.size());
  }
  if (j.contains("p") && j.contains("p_grid")) bad("give either p or p_grid");
  if (j.contains("p")) c.p_grid = as_doubles(j["p"], "p");
  if (j.contains("p_grid")) c.p_grid = as_doubles(j["p_grid"], "p_grid");
  if (j.contains("r_grid")) c.r_grid = as_dims(j["r_grid"], "r_grid");
  if (j.contains("trials")) {
    if (!j["trials"].is_number_integer()) bad("trials must be an integer");
    c.trials = j["trials"].get<int>();
  }
  if (j.contains("topology") && j.contains("topologies")) bad("give either topology or topologies");
  if (j.contains("topology")) c.topologies = as_strings(j["topology"], "topology");
  if (j.contains("topologies")) c.topologies = as_strings(j["topologies"], "topologies");
  if (j.contains("w")) {
    if (j["w"].is_array()) c.w = as_dims(j["w"], "w");
    else c.w = {as_size(j["w"], "w")};
  }
  if (j.contains("solver")) c.solver = parse_solver_config(j["solver"]);
  if (j.contains("d0_offset")) c.d0_offset = as_size(j["d0_offset"], "d0_offset");
  if (j.contains("seed")) c.seed = as_size(j["seed"], "seed");
  if (j.contains("image")) {
    if (!j["image"].is_string()) bad("image must be a string path");
    c.image = j["image"].get<std::string>();
  }
  if (j.contains("success_threshold")) c.success_threshold = as_double(j["success_threshold"], "success_threshold");
  const auto problems = c.check();
  if (!problems.empty()) bad(problems.front());
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: " + path + ": " + e.what());
  }
  ExperimentConfig c = parse_config(j);
  // Relative image paths resolve against the config file's directory.
  if (!c.image.empty() && fs::path(c.image).is_relative() && !fs::exists(c.image)) {
    const fs::path alt = fs::path(path).parent_path() / c.image;
    if (fs::exists(alt)) c.image = alt.string();
  }
  return c;
}

SyntheticProblem make_synthetic(const Dims& dims, const Dims& rank, double p, std::uint64_t seed) {
  if (dims.size() != rank.size()) throw std::invalid_argument("make_synthetic: rank length must equal the order");
  DenseTensor g(rank);
  CounterRng core_rng(derive_seed(seed, {kTagCore}));
  for (auto& v : g.storage()) v = core_rng.normal();
  std::vector<Matrix> a, basis;
  for (std::size_t n = 0; n < dims.size(); ++n) {
    CounterRng rng(derive_seed(seed, {kTagFactor, n}));
    Matrix m(static_cast<Eigen::Index>(dims[n]), static_cast<Eigen::Index>(rank[n]));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(m);
    basis.push_back(qr.householderQ() * Matrix::Identity(m.rows(), m.cols()));
    a.push_back(std::move(m));
  }
  DenseTensor truth = multi_mode_product(g, a);
  const auto mask = sample_mask(dims, p, derive_seed(seed, {kTagMask}));
  if (mask.linear.empty()) throw std::runtime_error("make_synthetic: empty sample");
  ObservationSet observed = project(truth, mask);
  return {std::move(truth), std::move(basis), std::move(observed)};
}

std::uint64_t run_seed(std::uint64_t master, std::size_t r, double p, int trial) {
  return derive_seed(master, {static_cast<std::uint64_t>(r), std::bit_cast<std::uint64_t>(p),
                              static_cast<std::uint64_t>(trial)});
}

std::vector<SyntheticRun> run_synthetic_batch(const ExperimentConfig& cfg, int threads) {
  const auto problems = cfg.check();
  if (!problems.empty()) throw std::invalid_argument("config: " + problems.front());
  const std::string topology = cfg.topologies.front();
  std::vector<SyntheticRun> runs;
  for (auto r : cell_ranks(cfg))
    for (double p : cfg.p_grid)
      for (int t = 0; t < cfg.trials; ++t) {
        SyntheticRun run;
        run.r = r;
        run.p = p;
        run.trial = t;
        run.seed = run_seed(cfg.seed, r, p, t);
        runs.push_back(std::move(run));
      }
  parallel_for(runs.size(), threads, [&](std::size_t i) {
    SyntheticRun& run = runs[i];
    try {
      const Dims rank = planted_rank(cfg, run.r);
      const auto prob = make_synthetic(cfg.dims, rank, run.p, run.seed);
      SolverConfig sc = cfg.solver;
      if (sc.d0.empty()) {
        sc.d0 = rank;
        for (auto& d : sc.d0) d += cfg.d0_offset;
        sc.d0 = capped(sc.d0, cfg.dims);
      }
      sc.seed = derive_seed(run.seed, {kTagSolver});
      const auto diagram = build_diagram(topology, cfg, sc.d0, *std::max_element(sc.d0.begin(), sc.d0.end()));
      auto res = solve(prob.observed, diagram, sc, &prob.basis);
      run.trace = std::move(res.trace);
      run.final_ranks = res.model.ranks();
      run.recovery_error = fro_norm(res.model.full() - prob.truth) / fro_norm(prob.truth);
      const double tau = run.trace.records.empty() ? run.trace.init_tau_norm : run.trace.records.back().tau_norm;
      run.success = tau < cfg.success_threshold && run.recovery_error < cfg.success_threshold;
    } catch (const std::exception& e) {
      run.error = e.what();
    }
  });
  return runs;
}

std::vector<PhaseCell> phase_cells(const ExperimentConfig& cfg, const std::vector<SyntheticRun>& runs) {
  std::vector<PhaseCell> cells;
  for (auto r : cell_ranks(cfg))
    for (double p : cfg.p_grid) {
      PhaseCell c;
      c.r = r;
      c.p = p;
      for (const auto& run : runs)
        if (run.r == r && run.p == p) {
          ++c.trials;
          if (run.success) ++c.successes;
        }
      cells.push_back(c);
    }
  return cells;
}

Dims default_inpaint_d0(const Dims& dims) {
  Dims d(dims.size(), 8);
  if (!d.empty()) d.back() = 3;
  return capped(d, dims);
}

InpaintBatch run_inpainting_batch(const ExperimentConfig& cfg, int threads) {
  const auto problems = cfg.check();
  if (!problems.empty()) throw std::invalid_argument("config: " + problems.front());
  InpaintBatch batch;
  batch.original = load_ppm(cfg.image);
  batch.plan = plan_reshape(batch.original.height, batch.original.width);
  const DenseTensor img = image_to_tensor(batch.original);
  const DenseTensor t5 = reshape_image(img, batch.plan);
  const double p = cfg.p_grid.front();

  for (const auto& topo : cfg.topologies)
    for (int t = 0; t < cfg.trials; ++t) {
      InpaintRun run;
      run.topology = topo;
      run.trial = t;
      // Same mask for every topology within a trial.
      run.seed = derive_seed(cfg.seed, {kTagInpaint, static_cast<std::uint64_t>(t)});
      batch.runs.push_back(std::move(run));
    }

  parallel_for(batch.runs.size(), threads, [&](std::size_t i) {
    InpaintRun& run = batch.runs[i];
    try {
      const auto mask = sample_mask(t5.dims(), p, derive_seed(run.seed, {kTagMask}));
      const auto observed = project(t5, mask);
      SolverConfig sc = cfg.solver;
      if (sc.d0.empty()) sc.d0 = default_inpaint_d0(t5.dims());
      sc.seed = derive_seed(run.seed, {kTagSolver});
      const auto diagram = build_diagram(run.topology, cfg, sc.d0, 8);
      auto res = solve(observed, diagram, sc);
      run.trace = std::move(res.trace);
      run.final_ranks = res.model.ranks();
      run.recovered = tensor_to_image(unreshape_image(res.model.full(), batch.plan));
      run.psnr = psnr(img, image_to_tensor(run.recovered));
      const DenseTensor shown = scatter(t5.dims(), observed.linear(), observed.values());
      run.observed = tensor_to_image(unreshape_image(shown, batch.plan));
    } catch (const std::exception& e) {
      run.error = e.what();
    }
  });
  return batch;
}

void write_synthetic_outputs(const std::string& out_dir, const ExperimentConfig& cfg,
                             const std::vector<SyntheticRun>& runs, bool timing) {
  ensure_dir(out_dir);
  const fs::path traces = fs::path(out_dir) / "traces";
  ensure_dir(traces.string());
  std::ostringstream summary;
  summary << "r,p,trial,seed,status,iterations,tau_norm,recovery_error,final_ranks,success,error\n";
  for (const auto& run : runs) {
    std::ostringstream name;
    name << "trace_r" << run.r << "_p" << format_double(run.p) << "_t" << run.trial << ".csv";
    std::ostringstream body;
    if (run.error.empty()) write_trace_csv(body, run.trace, timing);
    write_file(traces / name.str(), body.str());
    std::string err = run.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    summary << run.r << ',' << format_double(run.p) << ',' << run.trial << ',' << run.seed << ','
            << (run.error.empty() ? to_string(run.trace.status) : "error") << ',' << run.trace.records.size() << ','
            << (run.error.empty() ? final_tau(run.trace) : "") << ','
            << (run.error.empty() ? format_double(run.recovery_error) : "") << ',' << join(run.final_ranks) << ','
            << (run.success ? 1 : 0) << ',' << err << '\n';
  }
  write_file(fs::path(out_dir) / "summary.csv", summary.str());
  if (cfg.kind == ExperimentKind::phase) {
    std::ostringstream phase;
    write_phase_csv(phase, phase_cells(cfg, runs));
    write_file(fs::path(out_dir) / "phase.csv", phase.str());
  }
}

void write_phase_csv(std::ostream& os, const std::vector<PhaseCell>& cells) {
  os << "r,p,success_rate,trials\n";
  for (const auto& c : cells) os << c.r << ',' << format_double(c.p) << ',' << format_double(c.rate()) << ',' << c.trials << '\n';
}

void write_inpaint_outputs(const std::string& out_dir, const ExperimentConfig& cfg, const InpaintBatch& batch,
                           bool timing) {
  (void)cfg;
  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  ensure_dir((dir / "traces").string());
  ensure_dir((dir / "images").string());
  save_ppm((dir / "images" / "original.ppm").string(), batch.original);
  std::ostringstream csv;
  csv << "topology,trial,seed,status,iterations,tau_norm,psnr,final_ranks,padded_height,padded_width,error\n";
  std::set<int> observed_written;
  for (const auto& run : batch.runs) {
    const std::string stem = run.topology + "_t" + std::to_string(run.trial);
    std::ostringstream body;
    if (run.error.empty()) {
      write_trace_csv(body, run.trace, timing);
      save_ppm((dir / "images" / ("recovered_" + stem + ".ppm")).string(), run.recovered);
      if (observed_written.insert(run.trial).second)
        save_ppm((dir / "images" / ("observed_t" + std::to_string(run.trial) + ".ppm")).string(), run.observed);
    }
    write_file(dir / "traces" / ("trace_" + stem + ".csv"), body.str());
    std::string err = run.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    csv << run.topology << ',' << run.trial << ',' << run.seed << ','
        << (run.error.empty() ? to_string(run.trace.status) : "error") << ',' << run.trace.records.size() << ','
        << (run.error.empty() ? final_tau(run.trace) : "") << ','
        << (run.error.empty() ? (run.psnr >= kPsnrInfinity ? std::string("inf") : format_double(run.psnr)) : "")
        << ',' << join(run.final_ranks) << ',' << batch.plan.padded_height << ',' << batch.plan.padded_width << ','
        << err << '\n';
  }
  write_file(dir / "inpaint.csv", csv.str());
}

void write_manifest(const std::string& out_dir, const ExperimentConfig& cfg) {
  ensure_dir(out_dir);
  json m;
  m["version"] = version_string();
  m["git_describe"] = TTN_GIT_DESCRIBE;
  m["experiment"] = kind_name(cfg.kind);
  m["kernels"] = std::string(kernels::isa_name(kernels::active_isa()));
  m["seed"] = cfg.seed;
  m["config"] = cfg.source;
  m["solver"] = solver_config_to_json(cfg.solver);
  write_file(fs::path(out_dir) / "manifest.json", m.dump(2) + "\n");
}

std::string version_string() { return std::string(TTN_VERSION_STRING) + "-" + TTN_GIT_DESCRIBE; }

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace ttn
