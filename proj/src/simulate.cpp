#include "stdt/simulate.hpp"

#include "stdt/errors.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace stdt {

namespace {

// Independent RNG streams per random object.
enum Stream : std::uint64_t { kCore = 11, kFactors = 12, kFeatures = 13, kNoise = 14 };

struct Construction {
  std::vector<std::optional<DenseMatrix>> features;
  SimTruth truth;
};

Construction construct(const SimSpec& spec) {
  validate(spec);
  const std::size_t order = spec.dims.size();
  Construction out;
  Rng feature_rng = seeded_stream(spec.seed, kFeatures);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < order; ++k) {
    if (!spec.feature_dims[k]) {
      out.features.emplace_back();
      continue;
    }
    DenseMatrix x(static_cast<Eigen::Index>(spec.dims[k]),
                  static_cast<Eigen::Index>(*spec.feature_dims[k]));
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = normal(feature_rng);
    out.features.emplace_back(std::move(x));
  }

  Rng factor_rng = seeded_stream(spec.seed, kFactors);
  for (std::size_t k = 0; k < order; ++k) {
    const std::size_t p = spec.feature_dims[k].value_or(spec.dims[k]);
    out.truth.factors.push_back(haar_orthonormal(p, spec.rank[k], factor_rng));
  }

  // Reject the measure-zero draws where some unfolding of B loses rank.
  Rng core_rng = seeded_stream(spec.seed, kCore);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  DenseTensor core(spec.rank.r);
  bool ok = false;
  for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
    for (double& v : core.values()) v = unif(core_rng);
    const DenseTensor b =
        multilinear(core, std::span<const DenseMatrix>(out.truth.factors));
    ok = true;
    for (std::size_t k = 0; k < order && ok; ++k) {
      const DenseMatrix u = unfold(b, k);
      Eigen::JacobiSVD<DenseMatrix> svd(u);
      const auto& s = svd.singularValues();
      const auto r = static_cast<Eigen::Index>(spec.rank[k]);
      if (!(s(r - 1) > 1e-10)) ok = false;
      if (r < s.size() && s(r) > 1e-10) ok = false;
    }
  }
  if (!ok) throw NumericalError("could not draw a core tensor of full multilinear rank");

  std::vector<DenseMatrix> reduced;
  for (std::size_t k = 0; k < order; ++k)
    reduced.push_back(out.features[k] ? DenseMatrix(*out.features[k] * out.truth.factors[k])
                                      : out.truth.factors[k]);
  DenseTensor theta = multilinear(core, std::span<const DenseMatrix>(reduced));
  const double scale = max_norm(theta);
  if (!(scale > 0.0)) throw NumericalError("simulated linear predictor is identically zero");
  theta *= 1.0 / scale;
  core *= spec.effect_size / scale;

  out.truth.coefficient = multilinear(core, std::span<const DenseMatrix>(out.truth.factors));
  out.truth.core = std::move(core);
  out.truth.theta = std::move(theta);
  out.truth.effect_size = spec.effect_size;
  out.truth.mean = out.truth.theta;
  for (double& v : out.truth.mean.values()) v = mean_value(spec.family, spec.effect_size * v);
  return out;
}

}  // namespace

void validate(const SimSpec& spec) {
  const std::size_t order = spec.dims.size();
  if (order == 0) throw std::invalid_argument("dims must not be empty");
  if (spec.feature_dims.size() != order)
    throw std::invalid_argument("feature dims must have one entry per mode");
  if (spec.rank.order() != order)
    throw std::invalid_argument("rank must have one entry per mode");
  for (std::size_t k = 0; k < order; ++k) {
    const std::string m = std::to_string(k + 1);
    if (spec.dims[k] < 1) throw std::invalid_argument("d_" + m + " must be positive");
    const std::size_t p = spec.feature_dims[k].value_or(spec.dims[k]);
    if (p < 1 || p > spec.dims[k])
      throw std::invalid_argument("p_" + m + " must satisfy 1 <= p_" + m + " <= d_" + m);
    if (spec.rank[k] < 1 || spec.rank[k] > p)
      throw std::invalid_argument("r_" + m + "=" + std::to_string(spec.rank[k]) +
                                  " must satisfy 1 <= r_" + m + " <= p_" + m + "=" +
                                  std::to_string(p));
  }
  if (!spec.rank.admissible())
    throw std::invalid_argument("rank (" + spec.rank.to_string() +
                                ") is inadmissible: some r_k exceeds the product of the others");
  if (!(spec.effect_size > 0.0)) throw std::invalid_argument("effect size must be positive");
}

SimInstance generate(const SimSpec& spec) {
  Construction c = construct(spec);
  DenseTensor y(spec.dims);
  Rng noise = seeded_stream(spec.seed, kNoise);
  const double alpha = spec.effect_size;
  const auto theta = c.truth.theta.values();
  switch (spec.family) {
    case Family::Gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = alpha * theta[i] + normal(noise);
      break;
    }
    case Family::Poisson:
      for (std::size_t i = 0; i < y.size(); ++i) {
        std::poisson_distribution<long long> pois(std::exp(alpha * theta[i]));
        y[i] = static_cast<double>(pois(noise));
      }
      break;
    case Family::Bernoulli: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = unif(noise) < mean_value(Family::Bernoulli, alpha * theta[i]) ? 1.0 : 0.0;
      break;
    }
  }
  return {SupervisedProblem(std::move(y), std::move(c.features), spec.family),
          std::move(c.truth)};
}

SimInstance generate_noiseless(const SimSpec& spec) {
  if (spec.family != Family::Gaussian)
    throw std::invalid_argument("noiseless generation is defined for the gaussian family only");
  Construction c = construct(spec);
  DenseTensor y = spec.effect_size * c.truth.theta;
  return {SupervisedProblem(std::move(y), std::move(c.features), spec.family),
          std::move(c.truth)};
}

}  // namespace stdt
