#pragma once

#include "stdt/tensor.hpp"

#include <limits>
#include <vector>

namespace stdt {

struct EvalReport {
  double mse_coefficient = 0.0;
  double max_sin_theta = 0.0;
  std::vector<double> per_mode_sin_theta;
  double response_error = 0.0;
  double final_objective = 0.0;
};

/// Squared Frobenius distance.
double mse(const DenseTensor& b_hat, const DenseTensor& b_true);

std::vector<double> angle_errors(const std::vector<DenseMatrix>& factors_hat,
                                 const std::vector<DenseMatrix>& factors_true);

/// Returned by response_error when either input has zero variance.
inline constexpr double kUndefinedResponseError = std::numeric_limits<double>::infinity();

/// 1 - Pearson correlation of the vectorized tensors.
double response_error(const DenseTensor& y_hat_mean, const DenseTensor& mean_true);

}  // namespace stdt
