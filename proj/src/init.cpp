#include "ttn/init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ttn/rng.hpp"

namespace ttn {

namespace {

// Extends orthonormal u (rows x k) to `cols` columns: random orthonormal
// complement while possible, zero columns beyond the row count.
Matrix pad_orthonormal(const Matrix& u, std::size_t cols, std::uint64_t key) {
  const auto rows = u.rows();
  const auto k = u.cols();
  const auto c = static_cast<Eigen::Index>(cols);
  if (k >= c) return u.leftCols(c);
  Matrix out = Matrix::Zero(rows, c);
  out.leftCols(k) = u;
  const Eigen::Index extra = std::min<Eigen::Index>(c, rows) - k;
  if (extra > 0) {
    CounterRng rng(key);
    Matrix r(rows, extra);
    for (Eigen::Index j = 0; j < extra; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) r(i, j) = rng.normal();
    // Two passes of projection for numerical orthogonality.
    for (int pass = 0; pass < 2; ++pass) r -= u * (u.transpose() * r);
    Eigen::HouseholderQR<Matrix> qr(r);
    Matrix q = qr.householderQ() * Matrix::Identity(rows, extra);
    for (int pass = 0; pass < 2; ++pass) q -= u * (u.transpose() * q);
    Eigen::HouseholderQR<Matrix> qr2(q);
    out.middleCols(k, extra) = qr2.householderQ() * Matrix::Identity(rows, extra);
  }
  return out;
}

double relative_or_absolute(double err, double ref) { return ref > 0.0 ? err / ref : err; }

}  // namespace

Matrix leading_left_singular(const Matrix& m, std::size_t r, Vector* s) {
  const auto rows = m.rows();
  if (r == 0 || static_cast<Eigen::Index>(r) > rows)
    throw std::invalid_argument("leading_left_singular: rank must be in [1, rows]");
  const bool need_full = static_cast<Eigen::Index>(r) > std::min(rows, m.cols());
  Eigen::BDCSVD<Matrix> svd(m, need_full ? Eigen::ComputeFullU : Eigen::ComputeThinU);
  if (s) *s = svd.singularValues();
  return svd.matrixU().leftCols(static_cast<Eigen::Index>(r));
}

HosvdResult hosvd(const DenseTensor& t, const std::optional<Dims>& ranks) {
  const std::size_t order = t.order();
  if (ranks) {
    if (ranks->size() != order) throw std::invalid_argument("hosvd: rank vector length mismatch");
    for (std::size_t n = 0; n < order; ++n)
      if ((*ranks)[n] < 1 || (*ranks)[n] > t.dim(n))
        throw std::invalid_argument("hosvd: ranks must satisfy 1 <= r_n <= I_n");
  }
  const double max_dim = static_cast<double>(*std::max_element(t.dims().begin(), t.dims().end()));
  HosvdResult res;
  for (std::size_t n = 0; n < order; ++n) {
    const Matrix m = unfold(t, n);
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
    const Vector sv = svd.singularValues();
    std::size_t r;
    if (ranks) {
      r = (*ranks)[n];
    } else {
      const double thresh = max_dim * std::numeric_limits<double>::epsilon() * (sv.size() ? sv(0) : 0.0);
      r = 0;
      for (Eigen::Index j = 0; j < sv.size(); ++j)
        if (sv(j) > thresh) ++r;
      r = std::max<std::size_t>(r, 1);
    }
    Matrix u = svd.matrixU();
    if (static_cast<std::size_t>(u.cols()) < r) {
      Eigen::BDCSVD<Matrix> full(m, Eigen::ComputeFullU);
      u = full.matrixU();
    }
    res.factors.push_back(u.leftCols(static_cast<Eigen::Index>(r)));
    Vector full_sv = Vector::Zero(static_cast<Eigen::Index>(t.dim(n)));
    full_sv.head(sv.size()) = sv;
    res.singular_values.push_back(full_sv);
  }
  res.core = multi_mode_product(t, res.factors, Transpose::yes);
  return res;
}

MultilinearApprox best_multilinear_approx(const DenseTensor& t, const Dims& ranks, double tol,
                                          int max_iters) {
  const auto start = hosvd(t, ranks);
  MultilinearApprox res;
  res.factors = start.factors;
  res.core = start.core;
  const double tnorm = fro_norm(t);
  auto objective = [&] { return fro_norm(t - multi_mode_product(res.core, res.factors)); };
  res.objective.push_back(objective());
  for (int it = 0; it < max_iters; ++it) {
    if (res.objective.back() <= 1e-14 * tnorm) break;
    for (std::size_t n = 0; n < t.order(); ++n) {
      const DenseTensor y = multi_mode_product(t, res.factors, Transpose::yes, n);
      res.factors[n] = leading_left_singular(unfold(y, n), ranks[n]);
    }
    res.core = multi_mode_product(t, res.factors, Transpose::yes);
    const double prev = res.objective.back();
    res.objective.push_back(objective());
    ++res.sweeps;
    if (prev - res.objective.back() < tol * prev) break;
  }
  return res;
}

namespace {

NodeTensorSet tt_svd_nodes(const TensorDiagram& g, const DenseTensor& g0, std::uint64_t seed,
                           bool ring) {
  const std::size_t order = g.order();
  const Dims d = g.outgoing_weights();
  NodeTensorSet chain(order);
  Matrix c = Eigen::Map<const Matrix>(g0.data().data(), static_cast<Eigen::Index>(d[0]),
                                      static_cast<Eigen::Index>(g0.size() / d[0]));
  std::size_t r_prev = 1;
  for (std::size_t n = 0; n + 1 < order; ++n) {
    const std::size_t w = g.edges[n].weight;
    const Eigen::Index rows = static_cast<Eigen::Index>(r_prev * d[n]);
    c.resize(rows, c.size() / rows);
    const std::size_t keep = std::min<std::size_t>(w, std::min<std::size_t>(rows, c.cols()));
    Matrix u = leading_left_singular(c, keep);
    u = pad_orthonormal(u, w, derive_seed(seed, {0x7474, n}));
    Dims shape = n == 0 ? Dims{d[0], w} : Dims{r_prev, d[n], w};
    chain[n] = DenseTensor(shape, std::vector<double>(u.data(), u.data() + u.size()));
    c = u.transpose() * c;
    r_prev = w;
  }
  const Dims last = order == 1 ? Dims{d[0]} : Dims{r_prev, d[order - 1]};
  chain[order - 1] = DenseTensor(last, std::vector<double>(c.data(), c.data() + c.size()));
  if (!ring) return chain;

  // Embed the chain in the ring: the closing edge carries it in index 0, the
  // remaining slices get small noise so that they can become active.
  NodeTensorSet nodes(order);
  for (std::size_t n = 0; n < order; ++n) nodes[n] = DenseTensor(g.node_shape(n));
  const Dims& s0 = nodes[0].dims();
  const Dims& sl = nodes[order - 1].dims();
  for (std::size_t i = 0; i < s0[1]; ++i)
    for (std::size_t b = 0; b < s0[2]; ++b) nodes[0][s0[0] * (i + s0[1] * b)] = chain[0][i + s0[1] * b];
  for (std::size_t n = 1; n + 1 < order; ++n) nodes[n] = chain[n];
  for (std::size_t a = 0; a < sl[0]; ++a)
    for (std::size_t i = 0; i < sl[1]; ++i) nodes[order - 1][a + sl[0] * i] = chain[order - 1][a + sl[0] * i];
  for (std::size_t n : {std::size_t{0}, order - 1}) {
    const double scale = 1e-3 * fro_norm(nodes[n]) / std::sqrt(static_cast<double>(nodes[n].size()));
    CounterRng rng(derive_seed(seed, {0x7472, n}));
    for (std::size_t l = 0; l < nodes[n].size(); ++l) {
      const double z = rng.normal();
      if (nodes[n][l] == 0.0) nodes[n][l] = scale * z;
    }
  }
  return nodes;
}

NodeTensorSet cp_start_nodes(const TensorDiagram& g, const DenseTensor& g0, std::uint64_t seed) {
  const std::size_t order = g.order();
  const std::size_t r = g.edges[0].weight;
  NodeTensorSet nodes(order + 1);
  for (std::size_t n = 0; n < order; ++n) {
    const std::size_t dn = g0.dim(n);
    Matrix b = leading_left_singular(unfold(g0, n), std::min(r, dn));
    b = pad_orthonormal(b, std::min(r, dn), derive_seed(seed, {0x6370, n}));
    Matrix full(static_cast<Eigen::Index>(dn), static_cast<Eigen::Index>(r));
    full.leftCols(b.cols()) = b;
    CounterRng rng(derive_seed(seed, {0x6371, n}));
    for (Eigen::Index j = b.cols(); j < full.cols(); ++j) {
      for (Eigen::Index i = 0; i < full.rows(); ++i) full(i, j) = rng.normal();
      full.col(j).normalize();
    }
    nodes[n] = DenseTensor::from_matrix(full);
  }
  nodes[order] = DenseTensor({r});
  return nodes;
}

NodeTensorSet random_nodes(const TensorDiagram& g, std::uint64_t seed) {
  NodeTensorSet nodes;
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    DenseTensor t(g.node_shape(k));
    CounterRng rng(derive_seed(seed, {0x726e64, k}));
    for (auto& x : t.data()) x = rng.normal();
    nodes.push_back(std::move(t));
  }
  return nodes;
}

// Exact LLS for node k against g0; unit-normalizes CP factor columns into Lambda.
void fit_one_node(const TensorDiagram& g, NodeTensorSet& nodes, std::size_t k, const DenseTensor& g0) {
  const NodeEnvironment env(g, nodes, k);
  const Matrix rhs = env.core_to_matrix(g0);  // m x rest
  const Matrix& e = env.matrix();            // j x rest
  const Matrix bt = e.transpose().completeOrthogonalDecomposition().solve(rhs.transpose());
  nodes[k] = env.node_from_matrix(bt.transpose());
  if (g.kind == Topology::cp && !g.nodes[k].diagonal) {
    const std::size_t lam = g.node_count() - 1;
    Matrix b = nodes[k].to_matrix();
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      const double gam = b.col(j).norm();
      if (gam == 0.0) continue;
      b.col(j) /= gam;
      nodes[lam][static_cast<std::size_t>(j)] *= gam;
    }
    nodes[k] = DenseTensor::from_matrix(b);
  }
}

}  // namespace

NodeFit fit_node_tensors(const TensorDiagram& g, const DenseTensor& g0, double tol, int max_iters,
                         std::uint64_t seed) {
  const auto v = validate(g);
  if (!v.empty()) throw std::invalid_argument("fit_node_tensors: invalid diagram: " + v.front());
  if (g.outgoing_weights() != g0.dims())
    throw std::invalid_argument("fit_node_tensors: diagram d must equal the core dims");
  NodeFit res;
  const double gnorm = fro_norm(g0);

  if (g.node_count() == 1) {
    std::vector<std::size_t> perm;
    for (const auto& s : g.nodes[0].slots) perm.push_back(s.id);
    res.nodes = {permute(g0, perm)};
    res.error.push_back(0.0);
    res.sweeps = 1;
    return res;
  }

  switch (g.kind) {
    case Topology::tt: res.nodes = tt_svd_nodes(g, g0, seed, false); break;
    case Topology::tr: res.nodes = tt_svd_nodes(g, g0, seed, true); break;
    case Topology::cp: res.nodes = cp_start_nodes(g, g0, seed); break;
    default: res.nodes = random_nodes(g, seed); break;
  }
  if (g.kind == Topology::cp) fit_one_node(g, res.nodes, g.node_count() - 1, g0);

  double err = relative_or_absolute(fro_norm(contract(g, res.nodes) - g0), gnorm);
  res.error.push_back(err);
  for (int it = 0; it < max_iters && err > tol; ++it) {
    const double sweep_start = err;
    for (std::size_t k = 0; k < g.node_count(); ++k) {
      fit_one_node(g, res.nodes, k, g0);
      err = relative_or_absolute(fro_norm(contract(g, res.nodes) - g0), gnorm);
      res.error.push_back(err);
    }
    ++res.sweeps;
    if (sweep_start - err < tol * sweep_start) break;
  }
  return res;
}

TuckerWrappedModel initialize(const ObservationSet& observed, TensorDiagram diagram, const Dims& d0,
                              double tol, int max_iters, std::uint64_t seed) {
  if (observed.empty()) throw std::invalid_argument("initialize: empty Omega");
  if (d0.size() != observed.order() || diagram.order() != observed.order())
    throw std::invalid_argument("initialize: d0/diagram order mismatch");
  for (std::size_t n = 0; n < d0.size(); ++n) {
    if (d0[n] < 1 || d0[n] > observed.dims()[n])
      throw std::invalid_argument("initialize: d0 must satisfy 1 <= d0_n <= I_n");
    set_outgoing_weight(diagram, n, d0[n]);
  }
  const DenseTensor z = scaled_zero_fill(observed);
  auto hooi = best_multilinear_approx(z, d0, tol, max_iters);
  auto fit = fit_node_tensors(diagram, hooi.core, tol, max_iters, seed);
  TuckerWrappedModel m;
  m.factors = std::move(hooi.factors);
  m.diagram = std::move(diagram);
  m.nodes = std::move(fit.nodes);
  m.refresh_core();
  return m;
}

}  // namespace ttn
