#include "stdt/decompose.hpp"

#include "stdt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace stdt {

std::string RankVector::to_string(char sep) const {
  std::string s;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (k) s += sep;
    s += std::to_string(r[k]);
  }
  return s;
}

std::string_view to_string(InitKind kind) {
  switch (kind) {
    case InitKind::Spectral: return "spectral";
    case InitKind::Random: return "random";
    case InitKind::Both: return "both";
  }
  return "unknown";
}

InitKind parse_init(std::string_view name) {
  if (name == "spectral") return InitKind::Spectral;
  if (name == "random") return InitKind::Random;
  if (name == "both") return InitKind::Both;
  throw std::invalid_argument("unknown initialization '" + std::string(name) +
                              "' (expected spectral, random or both)");
}

SupervisedProblem::SupervisedProblem(DenseTensor y,
                                     std::vector<std::optional<DenseMatrix>> features,
                                     Family family)
    : y_(std::move(y)), features_(std::move(features)), family_(family) {
  if (features_.size() != y_.order())
    throw std::invalid_argument("need one feature entry per mode (" +
                                std::to_string(y_.order()) + "), got " +
                                std::to_string(features_.size()));
  for (std::size_t k = 0; k < features_.size(); ++k) {
    if (!features_[k]) continue;
    const DenseMatrix& x = *features_[k];
    if (static_cast<std::size_t>(x.rows()) != y_.dim(k))
      throw std::invalid_argument("feature matrix for mode " + std::to_string(k + 1) +
                                  " has " + std::to_string(x.rows()) +
                                  " rows, tensor mode has size " +
                                  std::to_string(y_.dim(k)));
    if (x.cols() < 1 || x.cols() > x.rows())
      throw std::invalid_argument("feature matrix for mode " + std::to_string(k + 1) +
                                  " must have 1 <= p_k <= d_k columns");
    if (!x.allFinite())
      throw DomainError("feature matrix for mode " + std::to_string(k + 1) +
                        " has non-finite entries");
    try {
      thin_qr(x);
    } catch (const RankDeficientError& e) {
      throw RankDeficientError("feature matrix for mode " + std::to_string(k + 1) +
                               ": " + e.what());
    }
  }
  check_domain(family_, y_);
}

SupervisedProblem::SupervisedProblem(DenseTensor y, Family family)
    : y_(std::move(y)), features_(y_.order()), family_(family) {
  check_domain(family_, y_);
}

std::size_t SupervisedProblem::feature_dim(std::size_t mode) const {
  return features_.at(mode) ? static_cast<std::size_t>(features_.at(mode)->cols())
                         : y_.dim(mode);
}

std::vector<std::size_t> SupervisedProblem::feature_dims() const {
  std::vector<std::size_t> p(order());
  for (std::size_t k = 0; k < order(); ++k) p[k] = feature_dim(k);
  return p;
}

DenseMatrix SupervisedProblem::apply_feature(std::size_t mode, const DenseMatrix& m) const {
  if (static_cast<std::size_t>(m.rows()) != feature_dim(mode))
    throw std::invalid_argument("factor for mode " + std::to_string(mode + 1) +
                                " has wrong row count");
  return features_.at(mode) ? DenseMatrix(*features_.at(mode) * m) : m;
}

DenseMatrix SupervisedProblem::feature_matrix(std::size_t mode) const {
  if (features_.at(mode)) return *features_.at(mode);
  const auto d = static_cast<Eigen::Index>(y_.dim(mode));
  return DenseMatrix::Identity(d, d);
}

void validate_rank(const SupervisedProblem& problem, const RankVector& rank) {
  if (rank.order() != problem.order())
    throw std::invalid_argument("rank has " + std::to_string(rank.order()) +
                                " entries, tensor has order " +
                                std::to_string(problem.order()));
  for (std::size_t k = 0; k < rank.order(); ++k)
    if (rank[k] < 1 || rank[k] > problem.feature_dim(k))
      throw std::invalid_argument("rank r_" + std::to_string(k + 1) + "=" +
                                  std::to_string(rank[k]) + " must lie in [1, p_" +
                                  std::to_string(k + 1) + "=" +
                                  std::to_string(problem.feature_dim(k)) + "]");
  if (!rank.admissible())
    throw std::invalid_argument("rank (" + rank.to_string() +
                                ") is inadmissible: some r_k exceeds the product of the others");
}

namespace {

std::vector<DenseMatrix> reduced_factors(const SupervisedProblem& problem,
                                         const std::vector<DenseMatrix>& factors) {
  if (factors.size() != problem.order())
    throw std::invalid_argument("need one factor per mode");
  std::vector<DenseMatrix> out;
  out.reserve(factors.size());
  for (std::size_t k = 0; k < factors.size(); ++k)
    out.push_back(problem.apply_feature(k, factors[k]));
  return out;
}

DenseTensor as_tensor(const Dims& dims, const DenseVector& v) {
  return DenseTensor(dims, std::vector<double>(v.data(), v.data() + v.size()));
}

Dims core_dims_of(const std::vector<DenseMatrix>& factors) {
  Dims d;
  for (const auto& f : factors) d.push_back(static_cast<std::size_t>(f.cols()));
  return d;
}

// Maps a storage offset to (row, column) of the mode-k unfolding.
std::pair<std::size_t, std::size_t> unfold_position(const Dims& dims, std::size_t mode,
                                                    std::size_t offset) {
  std::size_t left = 1;
  for (std::size_t j = 0; j < mode; ++j) left *= dims[j];
  const std::size_t l = offset % left;
  const std::size_t rest = offset / left;
  const std::size_t i = rest % dims[mode];
  const std::size_t r = rest / dims[mode];
  return {i, l + left * r};
}

}  // namespace

DenseTensor linear_predictor(const SupervisedProblem& problem, const DenseTensor& core,
                             const std::vector<DenseMatrix>& factors) {
  const auto reduced = reduced_factors(problem, factors);
  return multilinear(core, std::span<const DenseMatrix>(reduced));
}

double objective(const SupervisedProblem& problem, const DenseTensor& core,
                 const std::vector<DenseMatrix>& factors) {
  const DenseTensor theta = linear_predictor(problem, core, factors);
  return quasi_loglik(problem.family(), problem.y().values(), theta.values());
}

// ---------------------------------------------------------------------------
// Structured designs

FactorDesign::FactorDesign(const SupervisedProblem& problem, const DenseTensor& core,
                           const std::vector<DenseMatrix>& factors, std::size_t mode)
    : dims_(problem.dims()), mode_(mode), x_(problem.feature_matrix(mode)) {
  if (mode >= problem.order()) throw std::invalid_argument("mode out of range");
  const auto reduced = reduced_factors(problem, factors);
  DenseTensor partial = core;
  for (std::size_t j = 0; j < reduced.size(); ++j)
    if (j != mode) partial = ttm(partial, reduced[j], j);
  g_ = unfold(partial, mode);
  rank_ = static_cast<std::size_t>(g_.rows());
}

Eigen::Index FactorDesign::rows() const {
  return static_cast<Eigen::Index>(dims_product(dims_));
}

Eigen::Index FactorDesign::cols() const {
  return x_.cols() * static_cast<Eigen::Index>(rank_);
}

DenseVector FactorDesign::predict(const DenseVector& beta) const {
  Eigen::Map<const DenseMatrix> m(beta.data(), x_.cols(), static_cast<Eigen::Index>(rank_));
  const DenseMatrix theta_unf = (x_ * m) * g_;
  const DenseTensor theta = fold(theta_unf, mode_, dims_);
  return theta.as_vector();
}

DenseMatrix FactorDesign::weighted_gram(const DenseVector& w) const {
  const DenseMatrix w_unf = unfold(as_tensor(dims_, w), mode_);
  const Eigen::Index p = x_.cols();
  const auto r = static_cast<Eigen::Index>(rank_);
  DenseMatrix h(p * r, p * r);
  for (Eigen::Index b = 0; b < r; ++b) {
    for (Eigen::Index bb = b; bb < r; ++bb) {
      const DenseVector gg = g_.row(b).cwiseProduct(g_.row(bb)).transpose();
      const DenseVector s = w_unf * gg;
      const DenseMatrix block = x_.transpose() * s.asDiagonal() * x_;
      h.block(b * p, bb * p, p, p) = block;
      if (bb != b) h.block(bb * p, b * p, p, p) = block.transpose();
    }
  }
  return h;
}

DenseVector FactorDesign::adjoint(const DenseVector& res) const {
  const DenseMatrix r_unf = unfold(as_tensor(dims_, res), mode_);
  const DenseMatrix grad = x_.transpose() * (r_unf * g_.transpose());
  return Eigen::Map<const DenseVector>(grad.data(), grad.size());
}

CoreDesign::CoreDesign(const SupervisedProblem& problem,
                       const std::vector<DenseMatrix>& factors)
    : dims_(problem.dims()),
      core_dims_(core_dims_of(factors)),
      reduced_(reduced_factors(problem, factors)) {}

Eigen::Index CoreDesign::rows() const {
  return static_cast<Eigen::Index>(dims_product(dims_));
}

Eigen::Index CoreDesign::cols() const {
  return static_cast<Eigen::Index>(dims_product(core_dims_));
}

DenseVector CoreDesign::predict(const DenseVector& beta) const {
  return multilinear(as_tensor(core_dims_, beta), std::span<const DenseMatrix>(reduced_))
      .as_vector();
}

DenseMatrix CoreDesign::weighted_gram(const DenseVector& w) const {
  // Contract the weights with the row-wise squares of each X_k M_k:
  // T = W x_1 P_1^T ... x_K P_K^T, with P_k(i, b + r_k b') = A_k(i,b) A_k(i,b').
  DenseTensor t = as_tensor(dims_, w);
  for (std::size_t k = 0; k < reduced_.size(); ++k) {
    const DenseMatrix& a = reduced_[k];
    const Eigen::Index r = a.cols();
    DenseMatrix sq(a.rows(), r * r);
    for (Eigen::Index bb = 0; bb < r; ++bb)
      for (Eigen::Index b = 0; b < r; ++b)
        sq.col(b + r * bb) = a.col(b).cwiseProduct(a.col(bb));
    t = ttm_transposed(t, sq, k);
  }
  const auto n = static_cast<Eigen::Index>(dims_product(core_dims_));
  DenseMatrix h(n, n);
  const std::size_t order = core_dims_.size();
  std::vector<std::size_t> idx(order, 0);
  for (std::size_t off = 0; off < t.size(); ++off) {
    std::size_t rem = off, row = 0, col = 0, stride = 1;
    for (std::size_t k = 0; k < order; ++k) {
      const std::size_t rk = core_dims_[k];
      const std::size_t tk = rem % (rk * rk);
      rem /= rk * rk;
      row += (tk % rk) * stride;
      col += (tk / rk) * stride;
      stride *= rk;
    }
    h(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = t[off];
  }
  return h;
}

DenseVector CoreDesign::adjoint(const DenseVector& res) const {
  DenseTensor t = as_tensor(dims_, res);
  for (std::size_t k = 0; k < reduced_.size(); ++k) t = ttm_transposed(t, reduced_[k], k);
  return t.as_vector();
}

// ---------------------------------------------------------------------------
// Explicit designs

DenseMatrix block_design(const SupervisedProblem& problem, const DenseTensor& core,
                         const std::vector<DenseMatrix>& factors, std::size_t mode) {
  if (mode >= problem.order()) throw std::invalid_argument("mode out of range");
  const auto reduced = reduced_factors(problem, factors);
  if (core.dims() != core_dims_of(factors))
    throw std::invalid_argument("core dims do not match factor ranks");
  DenseTensor partial = core;
  for (std::size_t j = 0; j < reduced.size(); ++j)
    if (j != mode) partial = ttm(partial, reduced[j], j);
  const DenseMatrix g = unfold(partial, mode);
  const DenseMatrix x = problem.feature_matrix(mode);
  const Eigen::Index p = x.cols(), r = g.rows();
  const std::size_t n = dims_product(problem.dims());
  DenseMatrix design(static_cast<Eigen::Index>(n), p * r);
  for (std::size_t s = 0; s < n; ++s) {
    const auto [i, c] = unfold_position(problem.dims(), mode, s);
    for (Eigen::Index b = 0; b < r; ++b)
      for (Eigen::Index a = 0; a < p; ++a)
        design(static_cast<Eigen::Index>(s), a + p * b) =
            x(static_cast<Eigen::Index>(i), a) * g(b, static_cast<Eigen::Index>(c));
  }
  return design;
}

DenseMatrix core_design(const SupervisedProblem& problem,
                        const std::vector<DenseMatrix>& factors) {
  const auto reduced = reduced_factors(problem, factors);
  const Dims cdims = core_dims_of(factors);
  const Dims& dims = problem.dims();
  const std::size_t n = dims_product(dims), m = dims_product(cdims);
  DenseMatrix design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<std::size_t> i(dims.size()), b(dims.size());
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t rem = s;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      i[k] = rem % dims[k];
      rem /= dims[k];
    }
    for (std::size_t c = 0; c < m; ++c) {
      rem = c;
      double v = 1.0;
      for (std::size_t k = 0; k < dims.size(); ++k) {
        b[k] = rem % cdims[k];
        rem /= cdims[k];
        v *= reduced[k](static_cast<Eigen::Index>(i[k]), static_cast<Eigen::Index>(b[k]));
      }
      design(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return design;
}

// ---------------------------------------------------------------------------
// Initialization

TuckerFactors spectral_init(const SupervisedProblem& problem, const RankVector& rank) {
  validate_rank(problem, rank);
  DenseTensor ybar = problem.y();
  for (double& v : ybar.values()) {
    switch (problem.family()) {
      case Family::Gaussian: break;
      case Family::Bernoulli: v = 2.0 * v - 1.0; break;
      case Family::Poisson: v = std::log(v + 0.5); break;
    }
  }
  const std::size_t order = problem.order();
  std::vector<std::optional<QrResult>> qr(order);
  DenseTensor bbar = ybar;
  for (std::size_t k = 0; k < order; ++k) {
    if (problem.is_identity(k)) continue;
    qr[k] = thin_qr(*problem.feature(k));
    bbar = ttm_transposed(bbar, qr[k]->q, k);
  }
  TuckerFactors h = hosvd(bbar, rank.r);
  // Back to the original feature scale: M_k spans R_k^{-1} U_k, and the
  // triangular factor of its QR goes into the core.
  for (std::size_t k = 0; k < order; ++k) {
    DenseMatrix scaled = h.factors[k];
    if (qr[k])
      scaled = qr[k]->r.triangularView<Eigen::Upper>().solve(h.factors[k]);
    QrResult f = thin_qr_unchecked(scaled);
    h.factors[k] = std::move(f.q);
    h.core = ttm(h.core, f.r, k);
  }
  return h;
}

TuckerFactors random_init(const SupervisedProblem& problem, const RankVector& rank,
                          std::uint64_t seed) {
  validate_rank(problem, rank);
  TuckerFactors out;
  Rng factor_rng = seeded_stream(seed, 1);
  for (std::size_t k = 0; k < problem.order(); ++k)
    out.factors.push_back(haar_orthonormal(problem.feature_dim(k), rank[k], factor_rng));
  Rng core_rng = seeded_stream(seed, 2);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  out.core = DenseTensor(rank.r);
  for (double& v : out.core.values()) v = unif(core_rng);
  return out;
}

// ---------------------------------------------------------------------------
// Alternating updates

StdFit fit_from(const SupervisedProblem& problem, TuckerFactors start,
                const FitConfig& config) {
  validate_rank(problem, config.rank);
  if (config.max_outer_iters < 1 || !(config.outer_tol > 0.0))
    throw std::invalid_argument("max_outer_iters and outer_tol must be positive");
  const std::size_t order = problem.order();
  DenseTensor core = std::move(start.core);
  std::vector<DenseMatrix> factors = std::move(start.factors);
  if (factors.size() != order || core.dims() != Dims(config.rank.r))
    throw std::invalid_argument("starting point does not match the rank");
  for (std::size_t k = 0; k < order; ++k)
    if (static_cast<std::size_t>(factors[k].rows()) != problem.feature_dim(k) ||
        static_cast<std::size_t>(factors[k].cols()) != config.rank[k])
      throw std::invalid_argument("starting factor for mode " + std::to_string(k + 1) +
                                  " has the wrong shape");

  const Family fam = problem.family();
  const auto y = problem.y().values();
  const double bound = config.glm.predictor_bound;
  if (const double m = max_norm(linear_predictor(problem, core, factors)); m > bound)
    core *= bound / m * (1.0 - 1e-9);

  StdFit out;
  double obj = objective(problem, core, factors);
  out.trajectory.push_back(obj);
  bool failed = false;

  for (int t = 1; t <= config.max_outer_iters && !failed; ++t) {
    for (std::size_t k = 0; k < order; ++k) {
      const FactorDesign design(problem, core, factors, k);
      const DenseVector warm =
          Eigen::Map<const DenseVector>(factors[k].data(), factors[k].size());
      const GlmResult res = solve_glm(fam, y, design, warm, config.glm);
      if (!std::isfinite(res.final_objective)) {
        failed = true;
        break;
      }
      const DenseMatrix m = Eigen::Map<const DenseMatrix>(
          res.coefficients.data(), factors[k].rows(), factors[k].cols());
      QrResult qr = thin_qr_unchecked(m);
      factors[k] = std::move(qr.q);
      core = ttm(core, qr.r, k);
    }
    if (failed) break;

    const CoreDesign design(problem, factors);
    const GlmResult res = solve_glm(fam, y, design, core.as_vector().eval(), config.glm);
    if (!std::isfinite(res.final_objective)) break;
    core = as_tensor(core.dims(), res.coefficients);

    const double prev = obj;
    obj = res.final_objective;
    out.trajectory.push_back(obj);
    out.n_outer_iters = t;
    if (std::abs(obj - prev) <= config.outer_tol * std::max(std::abs(prev), 1.0)) {
      out.converged = true;
      break;
    }
  }

  out.coefficient = multilinear(core, std::span<const DenseMatrix>(factors));
  out.linear_predictor = linear_predictor(problem, core, factors);
  out.core = std::move(core);
  out.factors = std::move(factors);
  return out;
}

StdFit fit(const SupervisedProblem& problem, const FitConfig& config) {
  validate_rank(problem, config.rank);
  switch (config.init) {
    case InitKind::Spectral: {
      StdFit f = fit_from(problem, spectral_init(problem, config.rank), config);
      f.init_used = InitKind::Spectral;
      return f;
    }
    case InitKind::Random: {
      StdFit f = fit_from(problem, random_init(problem, config.rank, config.seed), config);
      f.init_used = InitKind::Random;
      return f;
    }
    case InitKind::Both: {
      StdFit warm = fit_from(problem, spectral_init(problem, config.rank), config);
      warm.init_used = InitKind::Spectral;
      StdFit cold = fit_from(problem, random_init(problem, config.rank, config.seed), config);
      cold.init_used = InitKind::Random;
      return cold.final_objective() > warm.final_objective() ? std::move(cold)
                                                              : std::move(warm);
    }
  }
  throw std::invalid_argument("unknown initialization kind");
}

}  // namespace stdt
