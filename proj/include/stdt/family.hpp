#pragma once

#include "stdt/tensor.hpp"

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stdt {

/// Exponential family with canonical link.
enum class Family { Gaussian, Bernoulli, Poisson };

std::string_view to_string(Family fam);
/// Accepts "gaussian", "bernoulli", "poisson" (case-sensitive).
Family parse_family(std::string_view name);

/// Log-partition b(theta).
double log_partition(Family fam, double theta);
/// Mean b'(theta), i.e. the inverse canonical link.
double mean_value(Family fam, double theta);
/// Variance function b''(theta).
double variance(Family fam, double theta);

/// Throws DomainError naming the first offending entry when y lies outside
/// the family's sample space.
void check_domain(Family fam, const DenseTensor& y);
void check_domain(Family fam, std::span<const double> y);

/// <Y, Theta> - sum b(theta), dispersion fixed at 1.
double quasi_loglik(Family fam, const DenseTensor& y, const DenseTensor& theta);
double quasi_loglik(Family fam, std::span<const double> y,
                    std::span<const double> theta);

struct GlmOptions {
  int max_newton_iters = 25;
  double tol = 1e-8;
  /// Bound on the largest |linear predictor|; infinity disables it.
  double predictor_bound = 1e4;
  /// Relative ridge: the Newton system gets ridge * trace(H)/cols on its diagonal.
  double ridge = 1e-8;
  int max_halvings = 20;
};

struct GlmResult {
  DenseVector coefficients;
  double final_objective = 0.0;
  bool converged = false;
  int n_iters = 0;
  bool hit_bound = false;
  /// Objective at the start and after every accepted Newton step.
  std::vector<double> objective_trace;
};

/// Linear map from coefficients to the predictor, with the two products the
/// Newton step needs. Structured implementations avoid forming the matrix.
class GlmDesign {
 public:
  virtual ~GlmDesign() = default;
  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;
  /// design * beta
  virtual DenseVector predict(const DenseVector& beta) const = 0;
  /// design^T diag(w) design
  virtual DenseMatrix weighted_gram(const DenseVector& w) const = 0;
  /// design^T r
  virtual DenseVector adjoint(const DenseVector& r) const = 0;
};

class DenseDesign final : public GlmDesign {
 public:
  explicit DenseDesign(const DenseMatrix& m) : m_(m) {}
  Eigen::Index rows() const override { return m_.rows(); }
  Eigen::Index cols() const override { return m_.cols(); }
  DenseVector predict(const DenseVector& beta) const override;
  DenseMatrix weighted_gram(const DenseVector& w) const override;
  DenseVector adjoint(const DenseVector& r) const override;

 private:
  const DenseMatrix& m_;
};

/// Maximizes sum_i y_i eta_i - b(eta_i), eta = design * beta, by damped Newton
/// (IRLS). Starts at `warm_start` when given, otherwise at zero. A step is
/// accepted only when the objective does not decrease and the predictor stays
/// within the bound; otherwise it is halved.
GlmResult solve_glm(Family fam, std::span<const double> y, const GlmDesign& design,
                    const std::optional<DenseVector>& warm_start,
                    const GlmOptions& opts = {});

GlmResult solve_glm(Family fam, std::span<const double> y, const DenseMatrix& design,
                    const std::optional<DenseVector>& warm_start,
                    const GlmOptions& opts = {});

}  // namespace stdt
