#include "stdt/metrics.hpp"

#include "stdt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stdt {

double mse(const DenseTensor& b_hat, const DenseTensor& b_true) {
  if (b_hat.dims() != b_true.dims()) throw std::invalid_argument("mse: dims mismatch");
  return (b_hat.as_vector() - b_true.as_vector()).squaredNorm();
}

std::vector<double> angle_errors(const std::vector<DenseMatrix>& factors_hat,
                                 const std::vector<DenseMatrix>& factors_true) {
  if (factors_hat.size() != factors_true.size())
    throw std::invalid_argument("angle_errors: different number of modes");
  std::vector<double> out;
  out.reserve(factors_hat.size());
  for (std::size_t k = 0; k < factors_hat.size(); ++k)
    out.push_back(sin_theta(factors_hat[k], factors_true[k]));
  return out;
}

double response_error(const DenseTensor& y_hat_mean, const DenseTensor& mean_true) {
  if (y_hat_mean.dims() != mean_true.dims())
    throw std::invalid_argument("response_error: dims mismatch");
  const auto a = y_hat_mean.as_vector();
  const auto b = mean_true.as_vector();
  const DenseVector ac = a.array() - a.mean();
  const DenseVector bc = b.array() - b.mean();
  const double va = ac.squaredNorm(), vb = bc.squaredNorm();
  if (!(va > 0.0) || !(vb > 0.0)) return kUndefinedResponseError;
  const double cor = ac.dot(bc) / std::sqrt(va * vb);
  return 1.0 - std::clamp(cor, -1.0, 1.0);
}

}  // namespace stdt
