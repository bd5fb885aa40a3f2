#include "stdt/family.hpp"

#include "stdt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stdt {

DenseVector DenseDesign::predict(const DenseVector& beta) const { return m_ * beta; }

DenseMatrix DenseDesign::weighted_gram(const DenseVector& w) const {
  const DenseMatrix scaled = m_.array().colwise() * w.array().sqrt();
  DenseMatrix g = DenseMatrix::Zero(m_.cols(), m_.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  return g.selfadjointView<Eigen::Lower>();
}

DenseVector DenseDesign::adjoint(const DenseVector& r) const {
  return m_.transpose() * r;
}

namespace {

double loglik(Family fam, std::span<const double> y, const DenseVector& eta) {
  const Eigen::Map<const DenseVector> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const double linear = yv.dot(eta);
  switch (fam) {
    case Family::Gaussian: return linear - 0.5 * eta.squaredNorm();
    case Family::Poisson: return linear - eta.array().exp().sum();
    case Family::Bernoulli: break;
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) total += log_partition(fam, eta(i));
  return linear - total;
}

double max_abs(const DenseVector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

DenseVector newton_direction(const DenseMatrix& hessian, const DenseVector& grad,
                             double ridge) {
  const Eigen::Index p = hessian.rows();
  double scale = p > 0 ? hessian.trace() / static_cast<double>(p) : 0.0;
  if (!(scale > 0.0)) scale = 1.0;
  DenseMatrix system = hessian;
  system.diagonal().array() += ridge * scale;
  Eigen::LDLT<DenseMatrix> ldlt(system);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    DenseVector d = ldlt.solve(grad);
    // One refinement pass against the undamped system removes the ridge bias
    // to second order.
    d += ldlt.solve(grad - hessian * d);
    if (d.allFinite()) return d;
  }
  return system.completeOrthogonalDecomposition().solve(grad);
}

}  // namespace

GlmResult solve_glm(Family fam, std::span<const double> y, const GlmDesign& design,
                    const std::optional<DenseVector>& warm_start,
                    const GlmOptions& opts) {
  const Eigen::Index n = design.rows(), p = design.cols();
  if (static_cast<Eigen::Index>(y.size()) != n)
    throw std::invalid_argument("solve_glm: response has " + std::to_string(y.size()) +
                                " entries, design has " + std::to_string(n) + " rows");
  if (!(opts.predictor_bound > 0.0))
    throw std::invalid_argument("solve_glm: predictor bound must be positive");
  if (opts.ridge < 0.0) throw std::invalid_argument("solve_glm: ridge must be nonnegative");

  GlmResult res;
  DenseVector beta = DenseVector::Zero(p);
  if (warm_start) {
    if (warm_start->size() != p)
      throw std::invalid_argument("solve_glm: warm start has wrong length");
    beta = *warm_start;
  }
  DenseVector eta = design.predict(beta);
  const double bound = opts.predictor_bound;
  if (const double m = max_abs(eta); m > bound) {
    // predictor is linear in beta, so shrinking moves it into the feasible box
    beta *= bound / m * (1.0 - 1e-12);
    eta = design.predict(beta);
    res.hit_bound = true;
  }
  double obj = loglik(fam, y, eta);
  res.objective_trace.push_back(obj);

  DenseVector yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];

  for (int it = 0; it < opts.max_newton_iters; ++it) {
    DenseVector mu(n), w(n);
    switch (fam) {
      case Family::Gaussian:
        mu = eta;
        w.setOnes();
        break;
      case Family::Poisson:
        mu = eta.array().exp();
        w = mu;
        break;
      case Family::Bernoulli:
        for (Eigen::Index i = 0; i < n; ++i) {
          mu(i) = mean_value(fam, eta(i));
          w(i) = variance(fam, eta(i));
        }
        break;
    }
    const DenseVector grad = design.adjoint(yv - mu);
    const DenseMatrix hess = design.weighted_gram(w);
    const DenseVector dir = newton_direction(hess, grad, opts.ridge);
    if (!dir.allFinite()) break;

    double step = 1.0;
    bool accepted = false;
    DenseVector beta_new, eta_new;
    double obj_new = obj;
    for (int h = 0; h <= opts.max_halvings; ++h, step *= 0.5) {
      beta_new = beta + step * dir;
      eta_new = design.predict(beta_new);
      if (max_abs(eta_new) > bound) {
        res.hit_bound = true;
        continue;
      }
      obj_new = loglik(fam, y, eta_new);
      if (std::isfinite(obj_new) && obj_new >= obj) {
        accepted = true;
        break;
      }
    }
    const double scale = std::max(std::abs(obj), 1.0);
    // Newton decrement: predicted ascent of the full step, twice over.
    const bool stationary = grad.dot(dir) <= 2.0 * opts.tol * scale;
    if (!accepted) {
      res.converged = std::isfinite(obj) && stationary;
      break;
    }
    const double change = obj_new - obj;
    beta = std::move(beta_new);
    eta = std::move(eta_new);
    obj = obj_new;
    res.objective_trace.push_back(obj);
    ++res.n_iters;
    if (std::abs(change) <= opts.tol * scale && (step == 1.0 || stationary)) {
      res.converged = true;
      break;
    }
    // A quadratic objective is maximized exactly by one full Newton step.
    if (fam == Family::Gaussian && step == 1.0) {
      res.converged = true;
      break;
    }
  }

  res.coefficients = std::move(beta);
  res.final_objective = obj;
  return res;
}

GlmResult solve_glm(Family fam, std::span<const double> y, const DenseMatrix& design,
                    const std::optional<DenseVector>& warm_start,
                    const GlmOptions& opts) {
  return solve_glm(fam, y, DenseDesign(design), warm_start, opts);
}

}  // namespace stdt
