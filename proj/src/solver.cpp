#include "ttn/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "ttn/analysis.hpp"
#include "ttn/init.hpp"
#include "ttn/kernels.hpp"
#include "ttn/lsqr.hpp"
#include "ttn/rng.hpp"

namespace ttn {

std::string strategy_name(const FactorStrategy& s) {
  switch (s.index()) {
    case 0: return "direct_rowwise";
    case 1: return "subsampled_rowwise";
    default: return "iterative";
  }
}

double SolverConfig::kappa_for(std::size_t n) const {
  if (kappa.empty()) return 100.0;
  return kappa.size() == 1 ? kappa[0] : kappa.at(n);
}

std::vector<std::string> SolverConfig::check() const {
  std::vector<std::string> v;
  for (double k : kappa)
    if (!(k >= 1.0)) v.push_back("kappa_n must be >= 1");
  if (!(tol > 0.0)) v.push_back("tol must be positive");
  if (!(inner_tol > 0.0)) v.push_back("inner_tol must be positive");
  if (!(init_tol > 0.0)) v.push_back("init_tol must be positive");
  if (!(node_lsqr_tol > 0.0)) v.push_back("node_lsqr_tol must be positive");
  if (max_outer < 1) v.push_back("max_outer must be >= 1");
  if (inner_max < 1) v.push_back("inner_max must be >= 1");
  if (node_lsqr_max < 1) v.push_back("node_lsqr_max must be >= 1");
  if (const auto* s = std::get_if<SubsampledRowwise>(&factor_strategy); s && !(s->c >= 1.0))
    v.push_back("subsampling factor c must be >= 1");
  if (const auto* s = std::get_if<IterativeFactor>(&factor_strategy)) {
    if (s->max_mv < 2) v.push_back("iterative max_mv must be >= 2");
    if (!(s->atol > 0.0)) v.push_back("iterative atol must be positive");
  }
  for (auto d : d0)
    if (d == 0) v.push_back("d0 entries must be positive");
  return v;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_outer: return "max_outer";
    case SolveStatus::diverged: return "diverged";
  }
  return "max_outer";
}

std::optional<int> SolverTrace::iterations_to(double level) const {
  for (const auto& r : records)
    if (r.tau_norm < level) return r.iter;
  return std::nullopt;
}

void write_trace_csv(std::ostream& os, const SolverTrace& trace, bool with_timing) {
  os << "iter,tau_raw,tau_norm,ranks,inner_sweeps,wall_ms,sin_theta\n";
  for (const auto& r : trace.records) {
    os << r.iter << ',' << format_double(r.tau_raw) << ',' << format_double(r.tau_norm) << ',';
    for (std::size_t n = 0; n < r.ranks.size(); ++n) os << (n ? "|" : "") << r.ranks[n];
    os << ',' << r.inner_sweeps << ',';
    if (with_timing) os << format_double(r.wall_ms);
    os << ',';
    for (std::size_t n = 0; n < r.sin_theta.size(); ++n) os << (n ? "|" : "") << format_double(r.sin_theta[n]);
    os << '\n';
  }
}

namespace {

// S = [[G; A_1, .., I, .., A_N]] permuted so that mode n comes first: the
// coefficient vector of observation e is the contiguous r_n-block at
// r_n * other_index(e).
struct RowSystem {
  std::size_t r = 0;
  std::vector<double> s;
  std::vector<std::size_t> offset;  // per observation, into s

  RowSystem(const TuckerWrappedModel& model, const ObservationSet& obs, std::size_t n) {
    const DenseTensor core = model.core();
    const DenseTensor full = multi_mode_product(core, model.factors, Transpose::no, n);
    std::vector<std::size_t> perm{n};
    for (std::size_t k = 0; k < full.order(); ++k)
      if (k != n) perm.push_back(k);
    s = permute(full, perm).storage();
    r = core.dim(n);
    const Dims& dims = obs.dims();
    std::size_t stride = 1;
    for (std::size_t k = 0; k < n; ++k) stride *= dims[k];
    const std::size_t span_n = stride * dims[n];
    const auto lin = obs.linear();
    offset.resize(lin.size());
    for (std::size_t e = 0; e < lin.size(); ++e) {
      const std::uint64_t lo = lin[e] % stride;
      const std::uint64_t hi = lin[e] / span_n;
      offset[e] = r * static_cast<std::size_t>(lo + stride * hi);
    }
  }

  const double* coeff(std::size_t e) const { return s.data() + offset[e]; }
};

// Ridge-floored normal equations over the given observations of one row.
bool solve_row(const RowSystem& sys, const ObservationSet& obs, std::span<const std::uint32_t> entries,
               double* out) {
  const std::size_t r = sys.r;
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
  Vector rhs = Vector::Zero(static_cast<Eigen::Index>(r));
  const auto values = obs.values();
  for (auto e : entries) {
    const double* a = sys.coeff(e);
    kernels::syr(1.0, a, r, m.data());
    kernels::axpy(values[e], std::span<const double>(a, r), std::span<double>(rhs.data(), r));
  }
  const double trace = m.trace();
  if (!(trace > 0.0)) return false;
  m.diagonal().array() += 1e-12 * trace / static_cast<double>(r);
  Eigen::LLT<Matrix> llt(m);
  Vector x;
  if (llt.info() == Eigen::Success)
    x = llt.solve(rhs);
  else
    x = m.completeOrthogonalDecomposition().solve(rhs);
  for (std::size_t j = 0; j < r; ++j) out[j] = x(static_cast<Eigen::Index>(j));
  return true;
}

}  // namespace

FactorUpdate update_factor(const TuckerWrappedModel& model, const ObservationSet& observed,
                           std::size_t n, const FactorStrategy& strategy, int iteration,
                           std::uint64_t seed) {
  if (n >= model.order()) throw std::out_of_range("update_factor: mode out of range");
  if (observed.empty()) throw std::invalid_argument("update_factor: no observations");
  if (observed.dims() != model.dims()) throw std::invalid_argument("update_factor: dims mismatch");
  const RowSystem sys(model, observed, n);
  const std::size_t rows = observed.dims()[n];
  const std::size_t r = sys.r;
  const Matrix& prev = model.factors[n];
  FactorUpdate fu;
  // Row-major working copy: row i of X is xt.col(i).
  Matrix xt = prev.transpose();

  if (const auto* it = std::get_if<IterativeFactor>(&strategy)) {
    const auto values = observed.values();
    const auto coords = observed.coords(n);
    const std::size_t m = observed.size();
    auto fwd = [&](const Vector& v) {
      Vector y(static_cast<Eigen::Index>(m));
      for (std::size_t e = 0; e < m; ++e)
        y(static_cast<Eigen::Index>(e)) =
            kernels::dot(std::span<const double>(v.data() + r * coords[e], r),
                         std::span<const double>(sys.coeff(e), r));
      return y;
    };
    auto adj = [&](const Vector& y) {
      Vector v = Vector::Zero(static_cast<Eigen::Index>(r * rows));
      for (std::size_t e = 0; e < m; ++e)
        kernels::axpy(y(static_cast<Eigen::Index>(e)), std::span<const double>(sys.coeff(e), r),
                      std::span<double>(v.data() + r * coords[e], r));
      return v;
    };
    const Vector x0 = Eigen::Map<const Vector>(xt.data(), xt.size());
    Vector b = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(m)) - fwd(x0);
    LsqrOptions opt;
    opt.atol = opt.btol = it->atol;
    opt.max_iters = std::max(1, it->max_mv / 2);
    const auto res = lsqr(fwd, adj, b, static_cast<Eigen::Index>(r * rows), opt);
    const Vector x = x0 + res.x;
    xt = Eigen::Map<const Matrix>(x.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(rows));
    for (std::size_t i = 0; i < rows; ++i)
      if (observed.row_count(n, i) == 0) fu.kept_rows.push_back(i);
  } else {
    const auto* sub = std::get_if<SubsampledRowwise>(&strategy);
    const std::size_t cap =
        sub ? static_cast<std::size_t>(std::ceil(sub->c * static_cast<double>(r))) : 0;
    std::vector<std::uint32_t> pick;
    for (std::size_t i = 0; i < rows; ++i) {
      auto entries = observed.row(n, i);
      if (sub && entries.size() > cap) {
        // Partial Fisher-Yates keyed by (seed, iteration, mode, row).
        pick.assign(entries.begin(), entries.end());
        CounterRng rng(derive_seed(seed, {0x726f77ULL, static_cast<std::uint64_t>(iteration), n, i}));
        for (std::size_t q = 0; q < cap; ++q) {
          const std::size_t j = q + static_cast<std::size_t>(rng.below(pick.size() - q));
          std::swap(pick[q], pick[j]);
        }
        pick.resize(cap);
        std::sort(pick.begin(), pick.end());
        entries = pick;
      }
      if (entries.empty() || !solve_row(sys, observed, entries, xt.col(static_cast<Eigen::Index>(i)).data()))
        fu.kept_rows.push_back(i);
    }
  }
  fu.x = xt.transpose();
  return fu;
}

bool orthonormalize_and_absorb(TuckerWrappedModel& model, std::size_t n, const Matrix& x) {
  const auto rows = x.rows();
  const auto r = x.cols();
  if (r != model.factors.at(n).cols() || rows != model.factors[n].rows())
    throw std::invalid_argument("orthonormalize_and_absorb: X shape mismatch");
  const double xnorm = x.norm();
  const double eps = std::numeric_limits<double>::epsilon();
  const double thresh = 10.0 * static_cast<double>(std::max(rows, r)) * eps * xnorm;

  Eigen::HouseholderQR<Matrix> qr(x);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, r);
  Matrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  bool deficient = !(xnorm > 0.0);
  for (Eigen::Index j = 0; j < r; ++j) deficient = deficient || std::abs(rr(j, j)) <= thresh;

  Eigen::PermutationMatrix<Eigen::Dynamic> perm(r);
  perm.setIdentity();
  if (deficient) {
    Eigen::ColPivHouseholderQR<Matrix> cp(x);
    q = cp.householderQ() * Matrix::Identity(rows, r);
    rr = cp.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    perm = cp.colsPermutation();
    const double lift = xnorm > 0.0 ? eps * xnorm : eps;
    for (Eigen::Index j = 0; j < r; ++j)
      if (std::abs(rr(j, j)) <= thresh) rr(j, j) = lift;
  }
  for (Eigen::Index j = 0; j < r; ++j)
    if (rr(j, j) < 0.0) {
      q.col(j) = -q.col(j);
      rr.row(j) = -rr.row(j);
    }
  // X P = Q R  =>  X = Q (R P^T)
  const Matrix rfull = deficient ? Matrix(rr * perm.transpose()) : rr;

  model.factors[n] = q;
  const auto& leg = model.diagram.outgoing.at(n);
  apply_node_mode_product(model.nodes, model.diagram, leg.node, leg.slot, rfull);
  if (model.cached_core)
    model.cached_core = mode_product(*model.cached_core, rfull, n);
  else
    model.refresh_core();
  return deficient;
}

NodeUpdateInfo update_nodes(TuckerWrappedModel& model, const ObservationSet& observed,
                            double inner_tol, int inner_max, int lsqr_max, double lsqr_tol) {
  NodeUpdateInfo info;
  const SampleMask mask = observed.mask();
  const auto values = observed.values();
  const Dims dims = observed.dims();
  const std::size_t m = observed.size();
  const Eigen::Map<const Vector> target(values.data(), static_cast<Eigen::Index>(m));
  const bool cp = model.diagram.kind == Topology::cp;
  const std::size_t lam = model.diagram.node_count() - 1;
  if (!model.cached_core) model.refresh_core();
  DenseTensor g_old = *model.cached_core;

  auto evaluate = [&](const DenseTensor& core) {
    const auto v = sampled_evaluate(core, model.factors, mask);
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };

  for (int sweep = 0; sweep < inner_max; ++sweep) {
    for (std::size_t k = 0; k < model.diagram.node_count(); ++k) {
      const NodeEnvironment env(model.diagram, model.nodes, k);
      const Dims shape = model.nodes[k].dims();
      const std::size_t len = model.nodes[k].size();
      auto fwd = [&](const Vector& v) {
        return evaluate(env.apply(DenseTensor(shape, std::vector<double>(v.data(), v.data() + v.size()))));
      };
      auto adj = [&](const Vector& y) {
        const DenseTensor z = multi_mode_product(
            scatter(dims, mask.linear, std::span<const double>(y.data(), m)), model.factors, Transpose::yes);
        const DenseTensor b = env.adjoint(z);
        return Vector(Eigen::Map<const Vector>(b.data().data(), static_cast<Eigen::Index>(b.size())));
      };
      const Vector b = target - evaluate(env.apply(model.nodes[k]));
      LsqrOptions opt;
      opt.atol = opt.btol = lsqr_tol;
      opt.max_iters = lsqr_max;
      const auto res = lsqr(fwd, adj, b, static_cast<Eigen::Index>(len), opt);
      auto data = model.nodes[k].data();
      for (std::size_t l = 0; l < len; ++l) data[l] += res.x(static_cast<Eigen::Index>(l));

      if (cp && k != lam) {
        // Unit columns, scale moved into Lambda.
        Matrix bm = model.nodes[k].to_matrix();
        for (Eigen::Index j = 0; j < bm.cols(); ++j) {
          const double gam = bm.col(j).norm();
          if (gam == 0.0) {
            ++info.zero_columns;
            continue;
          }
          bm.col(j) /= gam;
          model.nodes[lam][static_cast<std::size_t>(j)] *= gam;
        }
        model.nodes[k] = DenseTensor::from_matrix(bm);
      }
      model.refresh_core();
      info.objective.push_back((target - evaluate(*model.cached_core)).norm());
    }
    ++info.sweeps;
    const DenseTensor& g_new = *model.cached_core;
    const double base = fro_norm(g_old);
    const double change = base > 0.0 ? fro_norm(g_new - g_old) / base : fro_norm(g_new);
    g_old = g_new;
    if (change < inner_tol) break;
  }
  return info;
}

bool truncate_ranks(TuckerWrappedModel& model, const std::vector<double>& kappa) {
  const std::size_t order = model.order();
  auto kap = [&](std::size_t n) { return kappa.empty() ? 100.0 : (kappa.size() == 1 ? kappa[0] : kappa.at(n)); };
  bool any = false;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t n = 0; n < order; ++n) {
      if (!model.cached_core) model.refresh_core();
      const DenseTensor& g = *model.cached_core;
      const std::size_t r = g.dim(n);
      Eigen::BDCSVD<Matrix> svd(unfold(g, n), Eigen::ComputeThinU);
      const Vector& sv = svd.singularValues();
      if (sv.size() == 0 || !(sv(0) > 0.0)) continue;
      std::size_t s = 0;
      for (Eigen::Index j = 0; j < sv.size(); ++j)
        if (sv(0) <= kap(n) * sv(j)) ++s;
      if (s >= r) continue;
      const Matrix u = svd.matrixU().leftCols(static_cast<Eigen::Index>(s));
      model.factors[n] = model.factors[n] * u;
      const auto leg = model.diagram.outgoing[n];
      apply_node_mode_product(model.nodes, model.diagram, leg.node, leg.slot, u.transpose());
      set_outgoing_weight(model.diagram, n, s);
      model.refresh_core();
      changed = any = true;
    }
  }
  return any;
}

SolveResult solve(const ObservationSet& observed, const TensorDiagram& diagram,
                  const SolverConfig& config, const std::vector<Matrix>* ground_truth) {
  const auto problems = config.check();
  if (!problems.empty()) throw std::invalid_argument("solve: " + problems.front());
  if (observed.empty()) throw std::invalid_argument("solve: no observations");
  const std::size_t order = observed.order();
  Dims d0 = config.d0;
  if (d0.empty()) d0 = diagram.outgoing_weights();
  if (d0.size() != order) throw std::invalid_argument("solve: d0 length must equal the tensor order");
  std::vector<double> kappa(order);
  for (std::size_t n = 0; n < order; ++n) kappa[n] = config.kappa_for(n);

  SolveResult out;
  out.model = initialize(observed, diagram, d0, config.init_tol, config.init_max, config.seed);
  auto& model = out.model;
  auto& trace = out.trace;
  const SampleMask mask = observed.mask();

  auto sines = [&] {
    std::vector<double> s;
    if (!ground_truth) return s;
    for (std::size_t n = 0; n < order; ++n) s.push_back(subspace_sin(model.factors[n], (*ground_truth)[n]));
    return s;
  };
  trace.init_tau_norm = residual(sampled_evaluate(model, mask), observed, true);
  trace.init_sin_theta = sines();

  double best = std::numeric_limits<double>::infinity();
  int above = 0;
  trace.status = SolveStatus::max_outer;
  for (int t = 1; t <= config.max_outer; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    TraceRecord rec;
    rec.iter = t;
    for (std::size_t n = 0; n < order; ++n) {
      const auto fu = update_factor(model, observed, n, config.factor_strategy, t, config.seed);
      rec.empty_rows += static_cast<int>(fu.kept_rows.size());
      if (orthonormalize_and_absorb(model, n, fu.x)) ++rec.flags;
    }
    const auto info = update_nodes(model, observed, config.inner_tol, config.inner_max,
                                   config.node_lsqr_max, config.node_lsqr_tol);
    rec.inner_sweeps = info.sweeps;
    rec.flags += info.zero_columns;
    truncate_ranks(model, kappa);
    model.refresh_core();

    const auto vals = sampled_evaluate(model, mask);
    rec.tau_raw = residual(vals, observed, false);
    rec.tau_norm = residual(vals, observed, true);
    rec.ranks = model.ranks();
    rec.sin_theta = sines();
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    trace.records.push_back(rec);

    if (rec.tau_norm <= config.tol) {
      trace.status = SolveStatus::converged;
      break;
    }
    if (!std::isfinite(rec.tau_norm)) {
      trace.status = SolveStatus::diverged;
      break;
    }
    best = std::min(best, rec.tau_norm);
    above = rec.tau_norm > 10.0 * best ? above + 1 : 0;
    if (above >= 5) {
      trace.status = SolveStatus::diverged;
      break;
    }
  }
  return out;
}

}  // namespace ttn
