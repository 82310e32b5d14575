#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ttn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims = std::vector<std::size_t>;

std::size_t product(std::span<const std::size_t> dims);

// N-way real array, column-major: the first index runs fastest.
class DenseTensor {
 public:
  DenseTensor();
  explicit DenseTensor(Dims dims);
  DenseTensor(Dims dims, std::vector<double> data);

  static DenseTensor from_matrix(const Matrix& m);
  static DenseTensor from_vector(std::span<const double> v);

  std::size_t order() const { return dims_.size(); }
  std::size_t dim(std::size_t n) const { return dims_[n]; }
  const Dims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }

  double& operator[](std::size_t linear) { return data_[linear]; }
  double operator[](std::size_t linear) const { return data_[linear]; }

  double& at(std::span<const std::size_t> index) { return data_[linear_index(index)]; }
  double at(std::span<const std::size_t> index) const { return data_[linear_index(index)]; }

  std::size_t linear_index(std::span<const std::size_t> index) const;
  void multi_index(std::size_t linear, std::span<std::size_t> out) const;

  // Order-2 view as an Eigen matrix (copy).
  Matrix to_matrix() const;

  bool operator==(const DenseTensor& other) const = default;

 private:
  Dims dims_;
  std::vector<double> data_;
};

// Columns of the mode-n unfolding are the mode-n fibers, enumerated with the
// lowest-numbered remaining mode fastest. Modes are 0-based.
Matrix unfold(const DenseTensor& t, std::size_t n);
DenseTensor fold(const Matrix& m, std::size_t n, const Dims& dims);

// S = T x_n U, i.e. S_(n) = U * T_(n).
DenseTensor mode_product(const DenseTensor& t, const Matrix& u, std::size_t n);
// S = T x_n U^T without forming the transpose.
DenseTensor mode_product_transposed(const DenseTensor& t, const Matrix& u, std::size_t n);

enum class Transpose { no, yes };

// [[T; A_1, ..., A_N]]. With Transpose::yes computes [[T; A_1^T, ..., A_N^T]].
// A mode whose index equals `skip` is left untouched.
DenseTensor multi_mode_product(const DenseTensor& t, std::span<const Matrix> factors,
                               Transpose transpose = Transpose::no,
                               std::size_t skip = static_cast<std::size_t>(-1));

Matrix kron(const Matrix& a, const Matrix& b);
// A_N (x) ... (x) A_{n+1} (x) A_{n-1} (x) ... (x) A_1; the column space indexing
// of unfold(t, n).
Matrix kron_except(std::span<const Matrix> factors, std::size_t n);

double fro_norm(const DenseTensor& t);
double inner(const DenseTensor& a, const DenseTensor& b);

// result.dim(k) = t.dim(perm[k]).
DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm);

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator-(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator*(double s, const DenseTensor& a);

// Text fixture format: "dims: I1 ... IN" followed by the values in column-major order.
void write_tensor_text(std::ostream& os, const DenseTensor& t);
DenseTensor read_tensor_text(std::istream& is);

std::string format_double(double v);

}  // namespace ttn
