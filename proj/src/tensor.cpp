#include "ttn/tensor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ttn/kernels.hpp"

namespace ttn {

std::size_t product(std::span<const std::size_t> dims) {
  std::size_t p = 1;
  for (auto d : dims) p *= d;
  return p;
}

namespace {

void check_dims(const Dims& dims) {
  if (dims.empty()) throw std::invalid_argument("tensor order must be at least 1");
  for (auto d : dims)
    if (d == 0) throw std::invalid_argument("tensor dimensions must be positive");
}

void check_mode(const DenseTensor& t, std::size_t n) {
  if (n >= t.order())
    throw std::out_of_range("mode " + std::to_string(n) + " out of range for order-" +
                            std::to_string(t.order()) + " tensor");
}

struct ModeSplit {
  std::size_t left;   // product of dims before n
  std::size_t mid;    // dim n
  std::size_t right;  // product of dims after n
};

ModeSplit split_at(const Dims& dims, std::size_t n) {
  ModeSplit s{1, dims[n], 1};
  for (std::size_t k = 0; k < n; ++k) s.left *= dims[k];
  for (std::size_t k = n + 1; k < dims.size(); ++k) s.right *= dims[k];
  return s;
}

}  // namespace

DenseTensor::DenseTensor() : dims_{1}, data_(1, 0.0) {}

DenseTensor::DenseTensor(Dims dims) : dims_(std::move(dims)) {
  check_dims(dims_);
  data_.assign(product(dims_), 0.0);
}

DenseTensor::DenseTensor(Dims dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  check_dims(dims_);
  if (data_.size() != product(dims_))
    throw std::invalid_argument("tensor data length does not match dimensions");
}

DenseTensor DenseTensor::from_matrix(const Matrix& m) {
  DenseTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  Eigen::Map<Matrix>(t.data_.data(), m.rows(), m.cols()) = m;
  return t;
}

DenseTensor DenseTensor::from_vector(std::span<const double> v) {
  return DenseTensor({v.size()}, std::vector<double>(v.begin(), v.end()));
}

std::size_t DenseTensor::linear_index(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size()) throw std::invalid_argument("index order mismatch");
  std::size_t lin = 0;
  std::size_t stride = 1;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (index[k] >= dims_[k]) throw std::out_of_range("tensor index out of range");
    lin += index[k] * stride;
    stride *= dims_[k];
  }
  return lin;
}

void DenseTensor::multi_index(std::size_t linear, std::span<std::size_t> out) const {
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    out[k] = linear % dims_[k];
    linear /= dims_[k];
  }
}

Matrix DenseTensor::to_matrix() const {
  if (order() == 1) return Eigen::Map<const Matrix>(data_.data(), dims_[0], 1);
  if (order() != 2) throw std::invalid_argument("to_matrix requires an order-2 tensor");
  return Eigen::Map<const Matrix>(data_.data(), dims_[0], dims_[1]);
}

Matrix unfold(const DenseTensor& t, std::size_t n) {
  check_mode(t, n);
  const auto s = split_at(t.dims(), n);
  Matrix m(s.mid, s.left * s.right);
  const double* src = t.data().data();
  for (std::size_t r = 0; r < s.right; ++r)
    for (std::size_t i = 0; i < s.mid; ++i) {
      const double* fiber = src + s.left * (i + s.mid * r);
      for (std::size_t l = 0; l < s.left; ++l) m(i, l + s.left * r) = fiber[l];
    }
  return m;
}

DenseTensor fold(const Matrix& m, std::size_t n, const Dims& dims) {
  check_dims(dims);
  if (n >= dims.size()) throw std::out_of_range("fold mode out of range");
  const auto s = split_at(dims, n);
  if (static_cast<std::size_t>(m.rows()) != s.mid ||
      static_cast<std::size_t>(m.cols()) != s.left * s.right)
    throw std::invalid_argument("fold: matrix shape does not match dimensions");
  DenseTensor t(dims);
  double* dst = t.data().data();
  for (std::size_t r = 0; r < s.right; ++r)
    for (std::size_t i = 0; i < s.mid; ++i) {
      double* fiber = dst + s.left * (i + s.mid * r);
      for (std::size_t l = 0; l < s.left; ++l) fiber[l] = m(i, l + s.left * r);
    }
  return t;
}

namespace {

// op(U) is J x I_n; `transposed` selects op(U) = U^T.
DenseTensor mode_product_impl(const DenseTensor& t, const Matrix& u, std::size_t n,
                              bool transposed) {
  check_mode(t, n);
  const auto s = split_at(t.dims(), n);
  const std::size_t inner = transposed ? u.rows() : u.cols();
  const std::size_t out = transposed ? u.cols() : u.rows();
  if (inner != s.mid)
    throw std::invalid_argument("mode_product: matrix has " + std::to_string(inner) +
                                " columns, mode " + std::to_string(n) + " has size " +
                                std::to_string(s.mid));
  Dims dims = t.dims();
  dims[n] = out;
  DenseTensor res(dims);
  const double* src = t.data().data();
  double* dst = res.data().data();
  if (s.left == 1) {
    Eigen::Map<const Matrix> tm(src, s.mid, s.right);
    Eigen::Map<Matrix> sm(dst, out, s.right);
    if (transposed)
      sm.noalias() = u.transpose() * tm;
    else
      sm.noalias() = u * tm;
    return res;
  }
  for (std::size_t r = 0; r < s.right; ++r) {
    Eigen::Map<const Matrix> slab(src + r * s.left * s.mid, s.left, s.mid);
    Eigen::Map<Matrix> outslab(dst + r * s.left * out, s.left, out);
    if (transposed)
      outslab.noalias() = slab * u;
    else
      outslab.noalias() = slab * u.transpose();
  }
  return res;
}

}  // namespace

DenseTensor mode_product(const DenseTensor& t, const Matrix& u, std::size_t n) {
  return mode_product_impl(t, u, n, false);
}

DenseTensor mode_product_transposed(const DenseTensor& t, const Matrix& u, std::size_t n) {
  return mode_product_impl(t, u, n, true);
}

DenseTensor multi_mode_product(const DenseTensor& t, std::span<const Matrix> factors,
                               Transpose transpose, std::size_t skip) {
  if (factors.size() != t.order())
    throw std::invalid_argument("multi_mode_product: need one matrix per mode");
  // Apply in the order that shrinks the tensor first.
  std::vector<std::size_t> order;
  for (std::size_t n = 0; n < t.order(); ++n)
    if (n != skip) order.push_back(n);
  auto out_dim = [&](std::size_t n) {
    return transpose == Transpose::yes ? factors[n].cols() : factors[n].rows();
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ra = static_cast<double>(out_dim(a)) / static_cast<double>(t.dim(a));
    const double rb = static_cast<double>(out_dim(b)) / static_cast<double>(t.dim(b));
    return ra < rb;
  });
  DenseTensor cur = t;
  for (auto n : order)
    cur = mode_product_impl(cur, factors[n], n, transpose == Transpose::yes);
  return cur;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

Matrix kron_except(std::span<const Matrix> factors, std::size_t n) {
  Matrix k = Matrix::Ones(1, 1);
  for (std::size_t m = factors.size(); m-- > 0;) {
    if (m == n) continue;
    k = kron(k, factors[m]);
  }
  return k;
}

double fro_norm(const DenseTensor& t) { return std::sqrt(kernels::sumsq(t.data())); }

double inner(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("inner: dimension mismatch");
  return kernels::dot(a.data(), b.data());
}

DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm) {
  const std::size_t order = t.order();
  if (perm.size() != order) throw std::invalid_argument("permute: wrong permutation length");
  Dims dims(order);
  std::vector<bool> seen(order, false);
  for (std::size_t k = 0; k < order; ++k) {
    if (perm[k] >= order || seen[perm[k]]) throw std::invalid_argument("permute: not a permutation");
    seen[perm[k]] = true;
    dims[k] = t.dim(perm[k]);
  }
  bool identity = true;
  for (std::size_t k = 0; k < order; ++k) identity = identity && perm[k] == k;
  if (identity) return t;

  // Source strides, reordered to the destination's mode order.
  std::vector<std::size_t> src_stride(order);
  {
    std::vector<std::size_t> s(order);
    std::size_t acc = 1;
    for (std::size_t k = 0; k < order; ++k) {
      s[k] = acc;
      acc *= t.dim(k);
    }
    for (std::size_t k = 0; k < order; ++k) src_stride[k] = s[perm[k]];
  }
  DenseTensor res(dims);
  const double* src = t.data().data();
  double* dst = res.data().data();
  std::vector<std::size_t> idx(order, 0);
  std::size_t offset = 0;
  const std::size_t total = res.size();
  const std::size_t d0 = dims[0];
  const std::size_t s0 = src_stride[0];
  for (std::size_t lin = 0; lin < total; lin += d0) {
    for (std::size_t i = 0; i < d0; ++i) dst[lin + i] = src[offset + i * s0];
    for (std::size_t k = 1; k < order; ++k) {
      ++idx[k];
      offset += src_stride[k];
      if (idx[k] < dims[k]) break;
      offset -= idx[k] * src_stride[k];
      idx[k] = 0;
    }
  }
  return res;
}

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("tensor sum: dimension mismatch");
  DenseTensor r = a;
  kernels::axpy(1.0, b.data(), r.data());
  return r;
}

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("tensor difference: dimension mismatch");
  DenseTensor r = a;
  kernels::axpy(-1.0, b.data(), r.data());
  return r;
}

DenseTensor operator*(double s, const DenseTensor& a) {
  DenseTensor r = a;
  for (auto& v : r.data()) v *= s;
  return r;
}

std::string format_double(double v) {
  // Shortest representation that parses back to the same double.
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_tensor_text(std::ostream& os, const DenseTensor& t) {
  os << "dims:";
  for (auto d : t.dims()) os << ' ' << d;
  os << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) os << format_double(t[i]) << '\n';
}

DenseTensor read_tensor_text(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("tensor text: missing dims line");
  std::istringstream hs(line);
  std::string tag;
  hs >> tag;
  if (tag != "dims:") throw std::runtime_error("tensor text: expected 'dims:' header");
  Dims dims;
  std::size_t d;
  while (hs >> d) dims.push_back(d);
  if (dims.empty()) throw std::runtime_error("tensor text: no dimensions given");
  std::vector<double> data;
  data.reserve(product(dims));
  double v;
  while (data.size() < product(dims) && is >> v) data.push_back(v);
  if (data.size() != product(dims)) throw std::runtime_error("tensor text: too few values");
  return DenseTensor(std::move(dims), std::move(data));
}

}  // namespace ttn
