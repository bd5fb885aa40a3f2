#pragma once

#include "stdt/decompose.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace stdt {

struct SimSpec {
  Dims dims;
  /// p_k per mode; nullopt marks an identity feature mode (p_k = d_k).
  std::vector<std::optional<std::size_t>> feature_dims;
  RankVector rank;
  Family family = Family::Gaussian;
  double effect_size = 1.0;
  std::uint64_t seed = 0;
};

/// Ground truth behind a simulated data set.
///
/// `core` and `coefficient` carry the effect size, so that
/// core x {X_k M_k} = effect_size * theta is the predictor the data were drawn
/// from. `theta` is the unit max-norm predictor.
struct SimTruth {
  DenseTensor core;
  std::vector<DenseMatrix> factors;
  DenseTensor coefficient;
  DenseTensor theta;
  DenseTensor mean;  // f(effect_size * theta)
  double effect_size = 1.0;
};

struct SimInstance {
  SupervisedProblem problem;
  SimTruth truth;
};

/// Throws std::invalid_argument naming the violated constraint.
void validate(const SimSpec& spec);

SimInstance generate(const SimSpec& spec);

/// Gaussian only: Y equals effect_size * theta exactly.
SimInstance generate_noiseless(const SimSpec& spec);

}  // namespace stdt
