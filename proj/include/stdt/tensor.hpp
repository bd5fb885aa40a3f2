#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace stdt {

/// Column-major real matrix. Feature matrices, factor matrices and unfoldings
/// all use this type.
using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

using Dims = std::vector<std::size_t>;

/// Product of all entries (1 for an empty list).
std::size_t dims_product(const Dims& dims);

/// Dense order-K tensor stored in vec order (first index varies fastest).
///
/// Modes are zero-based in the C++ API: mode k addresses dims()[k].
class DenseTensor {
 public:
  DenseTensor() = default;

  /// Zero tensor with the given dimensions.
  explicit DenseTensor(Dims dims);

  /// Takes ownership of `values`; throws std::invalid_argument when the length
  /// does not match the product of `dims`.
  DenseTensor(Dims dims, std::vector<double> values);

  static DenseTensor constant(Dims dims, double value);

  const Dims& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  std::size_t dim(std::size_t mode) const { return dims_.at(mode); }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  /// Entry at a zero-based multi-index.
  double at(std::span<const std::size_t> index) const;
  double& at(std::span<const std::size_t> index);

  /// Storage offset of a zero-based multi-index.
  std::size_t offset(std::span<const std::size_t> index) const;

  /// View of the values as a column vector.
  Eigen::Map<const DenseVector> as_vector() const {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }
  Eigen::Map<DenseVector> as_vector() {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }

  bool all_finite() const;

  DenseTensor& operator+=(const DenseTensor& other);
  DenseTensor& operator-=(const DenseTensor& other);
  DenseTensor& operator*=(double s);

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  Dims dims_;
  std::vector<double> values_;
};

DenseTensor operator+(DenseTensor a, const DenseTensor& b);
DenseTensor operator-(DenseTensor a, const DenseTensor& b);
DenseTensor operator*(double s, DenseTensor t);

/// Mode-k unfolding: d_k rows, remaining modes in increasing order along the
/// columns with earlier modes varying faster.
DenseMatrix unfold(const DenseTensor& t, std::size_t mode);

/// Inverse of unfold for a tensor with the given dims.
DenseTensor fold(const DenseMatrix& m, std::size_t mode, const Dims& dims);

/// Mode-k product t ×_k m; requires m.cols() == t.dim(mode).
DenseTensor ttm(const DenseTensor& t, const DenseMatrix& m, std::size_t mode);

/// Same as ttm with m transposed, without forming the transpose.
DenseTensor ttm_transposed(const DenseTensor& t, const DenseMatrix& m,
                           std::size_t mode);

using ModeMatrix = std::pair<const DenseMatrix*, std::size_t>;

/// Sequential mode products; modes not listed are left untouched, which is how
/// identity feature matrices are applied without materializing them.
DenseTensor multilinear(const DenseTensor& t,
                        std::span<const ModeMatrix> mats);

/// Convenience overload: one matrix per mode, in mode order.
DenseTensor multilinear(const DenseTensor& t,
                        std::span<const DenseMatrix> per_mode);

double inner(const DenseTensor& a, const DenseTensor& b);
double fro_norm(const DenseTensor& t);
/// Largest absolute entry.
double max_norm(const DenseTensor& t);
std::vector<double> vec(const DenseTensor& t);

}  // namespace stdt
