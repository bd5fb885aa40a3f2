#include "stdt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stdt {

namespace {

void check_dims(const Dims& dims) {
  if (dims.empty()) throw std::invalid_argument("tensor order must be at least 1");
  for (auto d : dims)
    if (d == 0) throw std::invalid_argument("tensor dimensions must be positive");
}

// Sizes of the modes before and after `mode` in storage order.
std::pair<std::size_t, std::size_t> split_at(const Dims& dims, std::size_t mode) {
  std::size_t left = 1, right = 1;
  for (std::size_t j = 0; j < mode; ++j) left *= dims[j];
  for (std::size_t j = mode + 1; j < dims.size(); ++j) right *= dims[j];
  return {left, right};
}

void check_mode(const Dims& dims, std::size_t mode) {
  if (mode >= dims.size())
    throw std::invalid_argument("mode " + std::to_string(mode) +
                                " out of range for order-" +
                                std::to_string(dims.size()) + " tensor");
}

using ConstMap = Eigen::Map<const DenseMatrix>;
using MutMap = Eigen::Map<DenseMatrix>;

template <bool Transposed>
DenseTensor mode_product(const DenseTensor& t, const DenseMatrix& m,
                         std::size_t mode) {
  check_mode(t.dims(), mode);
  const auto inner_dim = static_cast<std::size_t>(Transposed ? m.rows() : m.cols());
  const auto out_dim = static_cast<std::size_t>(Transposed ? m.cols() : m.rows());
  if (inner_dim != t.dim(mode))
    throw std::invalid_argument("ttm: matrix has " + std::to_string(inner_dim) +
                                " inner columns, mode " + std::to_string(mode) +
                                " has size " + std::to_string(t.dim(mode)));
  if (out_dim == 0) throw std::invalid_argument("ttm: matrix has no output rows");
  Dims out_dims = t.dims();
  out_dims[mode] = out_dim;
  DenseTensor out(out_dims);
  const auto [left, right] = split_at(t.dims(), mode);
  const auto L = static_cast<Eigen::Index>(left);
  const auto din = static_cast<Eigen::Index>(inner_dim);
  const auto dout = static_cast<Eigen::Index>(out_dim);
  const double* src = t.values().data();
  double* dst = out.values().data();
  for (std::size_t r = 0; r < right; ++r) {
    ConstMap slab(src + r * left * inner_dim, L, din);
    MutMap res(dst + r * left * out_dim, L, dout);
    if constexpr (Transposed)
      res.noalias() = slab * m;
    else
      res.noalias() = slab * m.transpose();
  }
  return out;
}

}  // namespace

std::size_t dims_product(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

DenseTensor::DenseTensor(Dims dims) : dims_(std::move(dims)) {
  check_dims(dims_);
  values_.assign(dims_product(dims_), 0.0);
}

DenseTensor::DenseTensor(Dims dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  check_dims(dims_);
  if (values_.size() != dims_product(dims_))
    throw std::invalid_argument("tensor has " + std::to_string(values_.size()) +
                                " values but dims require " +
                                std::to_string(dims_product(dims_)));
}

DenseTensor DenseTensor::constant(Dims dims, double value) {
  DenseTensor t(std::move(dims));
  std::fill(t.values_.begin(), t.values_.end(), value);
  return t;
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size())
    throw std::invalid_argument("multi-index has wrong length");
  std::size_t off = 0, stride = 1;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (index[k] >= dims_[k]) throw std::out_of_range("tensor index out of range");
    off += index[k] * stride;
    stride *= dims_[k];
  }
  return off;
}

double DenseTensor::at(std::span<const std::size_t> index) const {
  return values_[offset(index)];
}

double& DenseTensor::at(std::span<const std::size_t> index) {
  return values_[offset(index)];
}

bool DenseTensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
  if (dims_ != other.dims_) throw std::invalid_argument("tensor dims mismatch");
  as_vector() += other.as_vector();
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& other) {
  if (dims_ != other.dims_) throw std::invalid_argument("tensor dims mismatch");
  as_vector() -= other.as_vector();
  return *this;
}

DenseTensor& DenseTensor::operator*=(double s) {
  as_vector() *= s;
  return *this;
}

DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
DenseTensor operator*(double s, DenseTensor t) { return t *= s; }

DenseMatrix unfold(const DenseTensor& t, std::size_t mode) {
  check_mode(t.dims(), mode);
  const auto [left, right] = split_at(t.dims(), mode);
  const std::size_t d = t.dim(mode);
  DenseMatrix out(static_cast<Eigen::Index>(d),
                  static_cast<Eigen::Index>(left * right));
  const double* src = t.values().data();
  for (std::size_t r = 0; r < right; ++r) {
    ConstMap slab(src + r * left * d, static_cast<Eigen::Index>(left),
                  static_cast<Eigen::Index>(d));
    out.middleCols(static_cast<Eigen::Index>(r * left),
                   static_cast<Eigen::Index>(left)) = slab.transpose();
  }
  return out;
}

DenseTensor fold(const DenseMatrix& m, std::size_t mode, const Dims& dims) {
  check_dims(dims);
  check_mode(dims, mode);
  const auto [left, right] = split_at(dims, mode);
  const std::size_t d = dims[mode];
  if (static_cast<std::size_t>(m.rows()) != d ||
      static_cast<std::size_t>(m.cols()) != left * right)
    throw std::invalid_argument("fold: matrix is " + std::to_string(m.rows()) +
                                "x" + std::to_string(m.cols()) +
                                ", expected " + std::to_string(d) + "x" +
                                std::to_string(left * right));
  DenseTensor out(dims);
  double* dst = out.values().data();
  for (std::size_t r = 0; r < right; ++r) {
    MutMap slab(dst + r * left * d, static_cast<Eigen::Index>(left),
                static_cast<Eigen::Index>(d));
    slab = m.middleCols(static_cast<Eigen::Index>(r * left),
                        static_cast<Eigen::Index>(left))
               .transpose();
  }
  return out;
}

DenseTensor ttm(const DenseTensor& t, const DenseMatrix& m, std::size_t mode) {
  return mode_product<false>(t, m, mode);
}

DenseTensor ttm_transposed(const DenseTensor& t, const DenseMatrix& m,
                           std::size_t mode) {
  return mode_product<true>(t, m, mode);
}

DenseTensor multilinear(const DenseTensor& t, std::span<const ModeMatrix> mats) {
  std::vector<bool> seen(t.order(), false);
  for (const auto& [m, mode] : mats) {
    check_mode(t.dims(), mode);
    if (seen[mode])
      throw std::invalid_argument("multilinear: mode " + std::to_string(mode) +
                                  " listed twice");
    seen[mode] = true;
  }
  DenseTensor out = t;
  for (const auto& [m, mode] : mats) out = ttm(out, *m, mode);
  return out;
}

DenseTensor multilinear(const DenseTensor& t,
                        std::span<const DenseMatrix> per_mode) {
  if (per_mode.size() != t.order())
    throw std::invalid_argument("multilinear: need one matrix per mode");
  std::vector<ModeMatrix> mats;
  mats.reserve(per_mode.size());
  for (std::size_t k = 0; k < per_mode.size(); ++k)
    mats.emplace_back(&per_mode[k], k);
  return multilinear(t, std::span<const ModeMatrix>(mats));
}

double inner(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("inner: dims mismatch");
  return a.as_vector().dot(b.as_vector());
}

double fro_norm(const DenseTensor& t) { return t.as_vector().norm(); }

double max_norm(const DenseTensor& t) {
  return t.size() == 0 ? 0.0 : t.as_vector().cwiseAbs().maxCoeff();
}

std::vector<double> vec(const DenseTensor& t) {
  return {t.values().begin(), t.values().end()};
}

}  // namespace stdt
