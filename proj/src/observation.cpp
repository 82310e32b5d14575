#include "ttn/observation.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ttn/kernels.hpp"
#include "ttn/model.hpp"
#include "ttn/rng.hpp"

namespace ttn {

ObservationSet::ObservationSet(Dims dims, std::vector<std::uint64_t> linear,
                               std::vector<double> values, std::optional<double> p_nominal)
    : dims_(std::move(dims)),
      linear_(std::move(linear)),
      values_(std::move(values)),
      p_nominal_(p_nominal) {
  if (dims_.empty()) throw std::invalid_argument("observation dims must be nonempty");
  for (auto d : dims_)
    if (d == 0) throw std::invalid_argument("observation dims must be positive");
  if (linear_.size() != values_.size())
    throw std::invalid_argument("observation indices and values differ in length");
  const std::uint64_t total = product(dims_);
  for (std::size_t e = 0; e < linear_.size(); ++e) {
    if (linear_[e] >= total) throw std::out_of_range("observation index out of range");
    if (e > 0 && linear_[e] <= linear_[e - 1])
      throw std::invalid_argument("observation indices must be strictly increasing");
  }
  if (linear_.size() > std::numeric_limits<std::uint32_t>::max())
    throw std::length_error("too many observations");

  const std::size_t order = dims_.size();
  coords_.assign(order, std::vector<std::uint32_t>(linear_.size()));
  for (std::size_t e = 0; e < linear_.size(); ++e) {
    std::uint64_t rem = linear_[e];
    for (std::size_t k = 0; k < order; ++k) {
      coords_[k][e] = static_cast<std::uint32_t>(rem % dims_[k]);
      rem /= dims_[k];
    }
  }
  // Counting sort of entries by coordinate, per mode. Entries stay in linear order
  // within a row.
  row_start_.resize(order);
  row_entries_.resize(order);
  for (std::size_t k = 0; k < order; ++k) {
    auto& start = row_start_[k];
    start.assign(dims_[k] + 1, 0);
    for (auto c : coords_[k]) ++start[c + 1];
    for (std::size_t i = 0; i < dims_[k]; ++i) start[i + 1] += start[i];
    auto& ent = row_entries_[k];
    ent.resize(linear_.size());
    std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
    for (std::size_t e = 0; e < linear_.size(); ++e)
      ent[fill[coords_[k][e]]++] = static_cast<std::uint32_t>(e);
  }
}

std::span<const std::uint32_t> ObservationSet::row(std::size_t n, std::size_t i) const {
  const auto& start = row_start_[n];
  return std::span<const std::uint32_t>(row_entries_[n]).subspan(start[i], start[i + 1] - start[i]);
}

double ObservationSet::norm() const { return std::sqrt(kernels::sumsq(values_)); }

SampleMask sample_mask(const Dims& dims, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sampling probability outside [0,1]");
  if (dims.empty()) throw std::invalid_argument("mask dims must be nonempty");
  SampleMask m{dims, {}, p};
  const std::uint64_t total = product(dims);
  const std::uint64_t key = derive_seed(seed, {0x6d61736bULL});
  m.linear.reserve(static_cast<std::size_t>(static_cast<double>(total) * p) + 16);
  for (std::uint64_t l = 0; l < total; ++l)
    if (uniform_at(key, l) < p) m.linear.push_back(l);
  return m;
}

std::vector<double> gather(const DenseTensor& t, std::span<const std::uint64_t> linear) {
  std::vector<double> v(linear.size());
  const auto data = t.data();
  for (std::size_t e = 0; e < linear.size(); ++e) v[e] = data[linear[e]];
  return v;
}

ObservationSet project(const DenseTensor& t, const SampleMask& mask) {
  if (t.dims() != mask.dims) throw std::invalid_argument("project: dims mismatch");
  return ObservationSet(mask.dims, mask.linear, gather(t, mask.linear), mask.p_nominal);
}

double residual(std::span<const double> model_values, const ObservationSet& observed,
                bool normalized) {
  if (model_values.size() != observed.size())
    throw std::invalid_argument("residual: value count does not match Omega");
  const double raw = std::sqrt(kernels::sqdiff(model_values, observed.values()));
  if (!normalized) return raw;
  const double denom = observed.norm();
  if (denom == 0.0) throw std::domain_error("normalized residual undefined: ||Pi(T)|| = 0");
  return raw / denom;
}

DenseTensor scatter(const Dims& dims, std::span<const std::uint64_t> linear,
                    std::span<const double> values) {
  DenseTensor t(dims);
  auto data = t.data();
  for (std::size_t e = 0; e < linear.size(); ++e) data[linear[e]] = values[e];
  return t;
}

DenseTensor scaled_zero_fill(const ObservationSet& observed) {
  if (observed.empty()) throw std::invalid_argument("scaled_zero_fill: empty Omega");
  const double scale =
      static_cast<double>(product(observed.dims())) / static_cast<double>(observed.size());
  DenseTensor t(observed.dims());
  auto data = t.data();
  const auto lin = observed.linear();
  const auto val = observed.values();
  for (std::size_t e = 0; e < lin.size(); ++e) data[lin[e]] = scale * val[e];
  return t;
}

namespace {

void check_factors(const DenseTensor& core, std::span<const Matrix> factors, const Dims& dims) {
  if (factors.size() != core.order() || dims.size() != core.order())
    throw std::invalid_argument("sampled_evaluate: order mismatch");
  for (std::size_t n = 0; n < factors.size(); ++n)
    if (static_cast<std::size_t>(factors[n].cols()) != core.dim(n) ||
        static_cast<std::size_t>(factors[n].rows()) != dims[n])
      throw std::invalid_argument("sampled_evaluate: factor " + std::to_string(n) +
                                  " does not match core/mask dims");
}

}  // namespace

std::vector<double> sampled_evaluate_entrywise(const DenseTensor& core,
                                               std::span<const Matrix> factors,
                                               const SampleMask& mask) {
  check_factors(core, factors, mask.dims);
  const std::size_t order = core.order();
  // Transposed factors so that a factor row is contiguous.
  std::vector<Matrix> ft(order);
  for (std::size_t n = 0; n < order; ++n) ft[n] = factors[n].transpose();
  std::vector<double> buf_a(core.size()), buf_b(core.size());
  std::vector<double> out(mask.linear.size());
  std::vector<std::size_t> ix(order);
  for (std::size_t e = 0; e < mask.linear.size(); ++e) {
    std::uint64_t rem = mask.linear[e];
    for (std::size_t k = 0; k < order; ++k) {
      ix[k] = rem % mask.dims[k];
      rem /= mask.dims[k];
    }
    // Contract the last mode first: core viewed as (rest x r_last).
    const double* src = core.data().data();
    std::size_t len = core.size();
    double* dst = buf_a.data();
    for (std::size_t k = order; k-- > 0;) {
      const std::size_t rk = core.dim(k);
      const std::size_t rows = len / rk;
      kernels::gemv(src, rows, rk, ft[k].col(static_cast<Eigen::Index>(ix[k])).data(), dst);
      src = dst;
      dst = (dst == buf_a.data()) ? buf_b.data() : buf_a.data();
      len = rows;
    }
    out[e] = src[0];
  }
  return out;
}

std::vector<double> sampled_evaluate_dense(const DenseTensor& core,
                                           std::span<const Matrix> factors,
                                           const SampleMask& mask) {
  check_factors(core, factors, mask.dims);
  return gather(multi_mode_product(core, factors), mask.linear);
}

std::vector<double> sampled_evaluate(const DenseTensor& core, std::span<const Matrix> factors,
                                     const SampleMask& mask) {
  check_factors(core, factors, mask.dims);
  const double entry_cost = static_cast<double>(mask.linear.size()) * static_cast<double>(core.size());
  double dense_cost = 0.0;
  for (std::size_t n = 0; n < core.order(); ++n) {
    double c = 1.0;
    for (std::size_t k = 0; k <= n; ++k) c *= static_cast<double>(mask.dims[k]);
    for (std::size_t k = n; k < core.order(); ++k) c *= static_cast<double>(core.dim(k));
    dense_cost += c;
  }
  return entry_cost < dense_cost ? sampled_evaluate_entrywise(core, factors, mask)
                                 : sampled_evaluate_dense(core, factors, mask);
}

std::vector<double> sampled_evaluate(const TuckerWrappedModel& model, const SampleMask& mask) {
  if (model.dims() != mask.dims) throw std::invalid_argument("sampled_evaluate: dims mismatch");
  return sampled_evaluate(model.core(), model.factors, mask);
}

void write_observations(std::ostream& os, const ObservationSet& obs) {
  os << "dims:";
  for (auto d : obs.dims()) os << ' ' << d;
  os << '\n';
  const double p = obs.p_nominal().value_or(static_cast<double>(obs.size()) /
                                            static_cast<double>(product(obs.dims())));
  os << "p: " << format_double(p) << '\n';
  for (std::size_t e = 0; e < obs.size(); ++e) {
    for (std::size_t k = 0; k < obs.order(); ++k) os << obs.coords(k)[e] + 1 << ' ';
    os << format_double(obs.values()[e]) << '\n';
  }
}

ObservationSet read_observations(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("observation file: missing dims line");
  std::istringstream hs(line);
  std::string tag;
  hs >> tag;
  if (tag != "dims:") throw std::runtime_error("observation file: expected 'dims:'");
  Dims dims;
  std::size_t d;
  while (hs >> d) dims.push_back(d);
  if (dims.empty()) throw std::runtime_error("observation file: no dims");
  if (!std::getline(is, line)) throw std::runtime_error("observation file: missing p line");
  std::istringstream ps(line);
  double p = 0.0;
  ps >> tag >> p;
  if (tag != "p:" || ps.fail()) throw std::runtime_error("observation file: expected 'p: <float>'");

  std::vector<std::uint64_t> linear;
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream es(line);
    std::uint64_t lin = 0, stride = 1;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      std::uint64_t i = 0;
      if (!(es >> i) || i < 1 || i > dims[k])
        throw std::runtime_error("observation file: bad index in line '" + line + "'");
      lin += (i - 1) * stride;
      stride *= dims[k];
    }
    double v;
    if (!(es >> v)) throw std::runtime_error("observation file: missing value in line '" + line + "'");
    linear.push_back(lin);
    values.push_back(v);
  }
  return ObservationSet(std::move(dims), std::move(linear), std::move(values), p);
}

}  // namespace ttn
