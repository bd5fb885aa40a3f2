#include "stdt/family.hpp"

#include "stdt/errors.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace stdt {

std::string_view to_string(Family fam) {
  switch (fam) {
    case Family::Gaussian: return "gaussian";
    case Family::Bernoulli: return "bernoulli";
    case Family::Poisson: return "poisson";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "gaussian") return Family::Gaussian;
  if (name == "bernoulli") return Family::Bernoulli;
  if (name == "poisson") return Family::Poisson;
  throw std::invalid_argument("unknown family '" + std::string(name) +
                              "' (expected gaussian, bernoulli or poisson)");
}

double log_partition(Family fam, double theta) {
  switch (fam) {
    case Family::Gaussian: return 0.5 * theta * theta;
    case Family::Poisson: return std::exp(theta);
    case Family::Bernoulli:
      return theta > 0.0 ? theta + std::log1p(std::exp(-theta))
                         : std::log1p(std::exp(theta));
  }
  return 0.0;
}

double mean_value(Family fam, double theta) {
  switch (fam) {
    case Family::Gaussian: return theta;
    case Family::Poisson: return std::exp(theta);
    case Family::Bernoulli:
      if (theta >= 0.0) return 1.0 / (1.0 + std::exp(-theta));
      else {
        const double e = std::exp(theta);
        return e / (1.0 + e);
      }
  }
  return 0.0;
}

double variance(Family fam, double theta) {
  switch (fam) {
    case Family::Gaussian: return 1.0;
    case Family::Poisson: return std::exp(theta);
    case Family::Bernoulli: {
      const double e = std::exp(-std::abs(theta));
      return e / ((1.0 + e) * (1.0 + e));
    }
  }
  return 0.0;
}

namespace {

void check_domain_impl(Family fam, std::span<const double> y,
                       const std::function<std::string(std::size_t)>& where) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = y[i];
    if (!std::isfinite(v))
      throw DomainError("non-finite response at " + where(i));
    if (fam == Family::Bernoulli && v != 0.0 && v != 1.0)
      throw DomainError("bernoulli response must be 0 or 1, got " +
                        std::to_string(v) + " at " + where(i));
    if (fam == Family::Poisson && (v < 0.0 || v != std::floor(v)))
      throw DomainError("poisson response must be a nonnegative integer, got " +
                        std::to_string(v) + " at " + where(i));
  }
}

}  // namespace

void check_domain(Family fam, std::span<const double> y) {
  check_domain_impl(fam, y, [](std::size_t i) {
    return "index " + std::to_string(i);
  });
}

void check_domain(Family fam, const DenseTensor& y) {
  const Dims& dims = y.dims();
  check_domain_impl(fam, y.values(), [&dims](std::size_t off) {
    // one-based multi-index, matching how users count entries
    std::string s = "entry (";
    for (std::size_t k = 0; k < dims.size(); ++k) {
      s += std::to_string(off % dims[k] + 1);
      off /= dims[k];
      if (k + 1 < dims.size()) s += ",";
    }
    return s + ")";
  });
}

double quasi_loglik(Family fam, std::span<const double> y,
                    std::span<const double> theta) {
  if (y.size() != theta.size())
    throw std::invalid_argument("quasi_loglik: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    total += y[i] * theta[i] - log_partition(fam, theta[i]);
  return total;
}

double quasi_loglik(Family fam, const DenseTensor& y, const DenseTensor& theta) {
  if (y.dims() != theta.dims())
    throw std::invalid_argument("quasi_loglik: dims mismatch");
  check_domain(fam, y);
  return quasi_loglik(fam, y.values(), theta.values());
}

}  // namespace stdt
