#include "stdt/decompose.hpp"
#include "stdt/errors.hpp"
#include "stdt/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace stdt;

namespace {

constexpr Family kFamilies[] = {Family::Gaussian, Family::Bernoulli, Family::Poisson};

DenseMatrix gaussian(Eigen::Index r, Eigen::Index c, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  DenseMatrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

DenseTensor gaussian_tensor(Dims dims, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  DenseTensor t(std::move(dims));
  for (double& v : t.values()) v = n(rng);
  return t;
}

DenseVector flat(const DenseMatrix& m) { return Eigen::Map<const DenseVector>(m.data(), m.size()); }

double rel(const DenseTensor& a, const DenseTensor& b) { return fro_norm(a - b) / fro_norm(b); }

// Response drawn from the family with predictor theta.
DenseTensor draw(Family fam, const DenseTensor& theta, Rng& rng) {
  DenseTensor y(theta.dims());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double mu = mean_value(fam, theta[i]);
    switch (fam) {
      case Family::Gaussian: y[i] = std::normal_distribution<double>(mu, 1.0)(rng); break;
      case Family::Bernoulli: y[i] = std::uniform_real_distribution<double>()(rng) < mu ? 1 : 0; break;
      case Family::Poisson: y[i] = static_cast<double>(std::poisson_distribution<long long>(mu)(rng)); break;
    }
  }
  return y;
}

// Small random problem with features on modes 0 and 2, identity on mode 1.
SupervisedProblem small_problem(Family fam, Rng& rng, Dims dims = {4, 3, 4}) {
  std::vector<std::optional<DenseMatrix>> feats(dims.size());
  feats[0] = gaussian(static_cast<Eigen::Index>(dims[0]), 3, rng);
  if (dims.size() > 2) feats[2] = gaussian(static_cast<Eigen::Index>(dims[2]), 2, rng);
  DenseTensor theta = gaussian_tensor(dims, rng, 0.5);
  return SupervisedProblem(draw(fam, theta, rng), std::move(feats), fam);
}

TuckerFactors random_state(const SupervisedProblem& p, const RankVector& r, Rng& rng) {
  TuckerFactors s;
  for (std::size_t k = 0; k < p.order(); ++k)
    s.factors.push_back(haar_orthonormal(p.feature_dim(k), r[k], rng));
  s.core = gaussian_tensor(r.r, rng, 0.5);
  return s;
}

// Theta entry by entry: sum over core and feature indices.
DenseTensor brute_theta(const SupervisedProblem& p, const DenseTensor& core,
                        const std::vector<DenseMatrix>& factors) {
  DenseTensor theta(p.dims());
  const std::size_t K = p.order();
  std::vector<DenseMatrix> x;
  for (std::size_t k = 0; k < K; ++k) x.push_back(p.feature_matrix(k));
  std::vector<std::size_t> i(K), b(K);
  for (std::size_t s = 0; s < theta.size(); ++s) {
    std::size_t rem = s;
    for (std::size_t k = 0; k < K; ++k) {
      i[k] = rem % p.dims()[k];
      rem /= p.dims()[k];
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < core.size(); ++c) {
      rem = c;
      double v = core[c];
      for (std::size_t k = 0; k < K; ++k) {
        b[k] = rem % core.dim(k);
        rem /= core.dim(k);
        double xm = 0.0;
        for (Eigen::Index a = 0; a < x[k].cols(); ++a)
          xm += x[k](static_cast<Eigen::Index>(i[k]), a) *
                factors[k](a, static_cast<Eigen::Index>(b[k]));
        v *= xm;
      }
      acc += v;
    }
    theta[s] = acc;
  }
  return theta;
}

}  // namespace

TEST_CASE("rank vectors and init names") {
  const RankVector r{{2, 3, 4}};
  CHECK(r.product() == 24);
  CHECK(r.to_string() == "2,3,4");
  CHECK(r.to_string('x') == "2x3x4");
  CHECK(r.admissible());
  CHECK_FALSE(RankVector{{1, 1, 2}}.admissible());
  CHECK(RankVector{{1, 2, 3}} < RankVector{{1, 3, 1}});
  for (InitKind k : {InitKind::Spectral, InitKind::Random, InitKind::Both})
    CHECK(parse_init(to_string(k)) == k);
  CHECK_THROWS_AS(parse_init("hosvd"), std::invalid_argument);
}

TEST_CASE("problem construction validates inputs") {
  Rng rng(1);
  const DenseTensor y = gaussian_tensor({4, 3}, rng);
  std::vector<std::optional<DenseMatrix>> f(2);
  f[0] = gaussian(5, 2, rng);
  CHECK_THROWS_AS(SupervisedProblem(y, f, Family::Gaussian), std::invalid_argument);
  f[0] = gaussian(4, 5, rng);
  CHECK_THROWS_AS(SupervisedProblem(y, f, Family::Gaussian), std::invalid_argument);
  DenseMatrix dup(4, 2);
  dup << 1, 2, 1, 2, 1, 2, 1, 2;
  f[0] = dup;
  CHECK_THROWS_AS(SupervisedProblem(y, f, Family::Gaussian), RankDeficientError);
  f.pop_back();
  CHECK_THROWS_AS(SupervisedProblem(y, f, Family::Gaussian), std::invalid_argument);
  CHECK_THROWS_AS(SupervisedProblem(y, Family::Poisson), DomainError);

  std::vector<std::optional<DenseMatrix>> ok(2);
  ok[1] = gaussian(3, 2, rng);
  const SupervisedProblem p(y, ok, Family::Gaussian);
  CHECK(p.is_identity(0));
  CHECK_FALSE(p.is_identity(1));
  CHECK(p.feature_dims() == std::vector<std::size_t>{4, 2});
  CHECK(p.feature_matrix(0) == DenseMatrix::Identity(4, 4));
  CHECK_THROWS_AS(validate_rank(p, RankVector{{2, 3}}), std::invalid_argument);
  CHECK_THROWS_AS(validate_rank(p, RankVector{{2, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(validate_rank(p, RankVector{{2}}), std::invalid_argument);
  CHECK_THROWS_AS(validate_rank(p, RankVector{{0, 1}}), std::invalid_argument);
  CHECK_NOTHROW(validate_rank(p, RankVector{{2, 2}}));
}

TEST_CASE("objective examples") {
  Rng rng(2);
  const RankVector r{{2, 2, 2}};
  {
    const SupervisedProblem p = small_problem(Family::Gaussian, rng);
    TuckerFactors s = random_state(p, r, rng);
    CHECK(objective(p, DenseTensor(r.r), s.factors) == 0.0);
    CHECK(objective(p, s.core, s.factors) ==
          doctest::Approx(quasi_loglik(p.family(), p.y(), brute_theta(p, s.core, s.factors)))
              .epsilon(1e-12));
  }
  {
    const SupervisedProblem p = small_problem(Family::Bernoulli, rng);
    TuckerFactors s = random_state(p, r, rng);
    CHECK(objective(p, DenseTensor(r.r), s.factors) ==
          doctest::Approx(-48.0 * std::log(2.0)));
  }
}

TEST_CASE("block design reproduces theta from a brute-force enumeration") {
  Rng rng(3);
  for (Family fam : kFamilies) {
    const SupervisedProblem p = small_problem(fam, rng);
    const RankVector r{{2, 2, 1}};
    const TuckerFactors s = random_state(p, r, rng);
    const DenseTensor theta = brute_theta(p, s.core, s.factors);
    CHECK(rel(linear_predictor(p, s.core, s.factors), theta) < 1e-12);
    for (std::size_t k = 0; k < 3; ++k) {
      const DenseMatrix d = block_design(p, s.core, s.factors, k);
      CHECK(d.rows() == 48);
      CHECK(d.cols() == static_cast<Eigen::Index>(p.feature_dim(k) * r[k]));
      CHECK((d * flat(s.factors[k]) - theta.as_vector()).cwiseAbs().maxCoeff() < 1e-12);
    }
    const DenseMatrix cd = core_design(p, s.factors);
    CHECK((cd * s.core.as_vector() - theta.as_vector()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("block design for a 2x2 identity problem with identity core") {
  const SupervisedProblem p(DenseTensor({2, 2}), Family::Gaussian);
  const DenseTensor core({2, 2}, {1, 0, 0, 1});
  const std::vector<DenseMatrix> f(2, DenseMatrix::Identity(2, 2));
  // Theta(i,j) = sum_b M1(i,b) M2(j,b); column a + 2b of the mode-0 design is
  // d Theta / d M1(a,b) = [i == a] * M2(j,b) = [i == a][j == b].
  const DenseMatrix d = block_design(p, core, f, 0);
  for (std::size_t s = 0; s < 4; ++s)
    for (Eigen::Index a = 0; a < 2; ++a)
      for (Eigen::Index b = 0; b < 2; ++b) {
        const std::size_t i = s % 2, j = s / 2;
        const double expect = (static_cast<Eigen::Index>(i) == a && static_cast<Eigen::Index>(j) == b) ? 1.0 : 0.0;
        CHECK(d(static_cast<Eigen::Index>(s), a + 2 * b) == expect);
      }
}

TEST_CASE("block design with orthonormal inputs has full column rank") {
  Rng rng(4);
  const SupervisedProblem p(gaussian_tensor({3, 3, 3}, rng), Family::Gaussian);
  const RankVector r{{2, 2, 2}};
  TuckerFactors s = random_state(p, r, rng);
  for (std::size_t k = 0; k < 3; ++k) {
    Eigen::JacobiSVD<DenseMatrix> svd(block_design(p, s.core, s.factors, k));
    CHECK(svd.singularValues().minCoeff() > 1e-8);
  }
}

TEST_CASE("structured designs agree with the explicit ones") {
  Rng rng(5);
  for (Family fam : kFamilies) {
    const SupervisedProblem p = small_problem(fam, rng);
    const RankVector r{{3, 2, 2}};
    const TuckerFactors s = random_state(p, r, rng);
    const DenseVector w = gaussian(48, 1, rng).cwiseAbs().col(0);
    const DenseVector res = gaussian(48, 1, rng).col(0);
    for (std::size_t k = 0; k < 3; ++k) {
      const DenseMatrix d = block_design(p, s.core, s.factors, k);
      const FactorDesign fd(p, s.core, s.factors, k);
      const DenseVector beta = gaussian(d.cols(), 1, rng).col(0);
      CHECK((fd.predict(beta) - d * beta).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((fd.adjoint(res) - d.transpose() * res).cwiseAbs().maxCoeff() < 1e-12);
      const DenseMatrix gram = d.transpose() * w.asDiagonal() * d;
      CHECK((fd.weighted_gram(w) - gram).cwiseAbs().maxCoeff() < 1e-11);
    }
    const DenseMatrix cd = core_design(p, s.factors);
    const CoreDesign core(p, s.factors);
    const DenseVector beta = gaussian(cd.cols(), 1, rng).col(0);
    CHECK((core.predict(beta) - cd * beta).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((core.adjoint(res) - cd.transpose() * res).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((core.weighted_gram(w) - cd.transpose() * w.asDiagonal() * cd).cwiseAbs().maxCoeff() <
          1e-11);
  }
}

TEST_CASE("GLM updates on explicit and structured designs coincide") {
  Rng rng(6);
  for (Family fam : kFamilies) {
    CAPTURE(to_string(fam));
    const SupervisedProblem p = small_problem(fam, rng, {4, 3, 4});
    const RankVector r{{2, 2, 2}};
    const TuckerFactors s = random_state(p, r, rng);
    const auto y = p.y().values();
    for (std::size_t k = 0; k < 3; ++k) {
      const DenseMatrix d = block_design(p, s.core, s.factors, k);
      const GlmResult a = solve_glm(fam, y, d, flat(s.factors[k]));
      const GlmResult b = solve_glm(fam, y, FactorDesign(p, s.core, s.factors, k), flat(s.factors[k]));
      CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-8);
    }
    const GlmResult a = solve_glm(fam, y, core_design(p, s.factors), s.core.as_vector().eval());
    const GlmResult b = solve_glm(fam, y, CoreDesign(p, s.factors), s.core.as_vector().eval());
    CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("QR push-through leaves the objective unchanged") {
  Rng rng(7);
  for (Family fam : kFamilies) {
    const SupervisedProblem p = small_problem(fam, rng);
    const RankVector r{{2, 2, 2}};
    TuckerFactors s = random_state(p, r, rng);
    s.factors[0] = gaussian(3, 2, rng);  // not orthonormal, as after a GLM update
    const double before = objective(p, s.core, s.factors);
    const QrResult qr = thin_qr(s.factors[0]);
    std::vector<DenseMatrix> f = s.factors;
    f[0] = qr.q;
    const double after = objective(p, ttm(s.core, qr.r, 0), f);
    CHECK(std::abs(before - after) <= 1e-9 * std::max(1.0, std::abs(before)));
  }
}

TEST_CASE("spectral initialization") {
  Rng rng(8);
  SUBCASE("exact low-rank Gaussian tensor with identity features") {
    const std::vector<DenseMatrix> u{haar_orthonormal(5, 2, rng), haar_orthonormal(4, 2, rng),
                                     haar_orthonormal(6, 3, rng)};
    const DenseTensor y = multilinear(gaussian_tensor({2, 2, 3}, rng),
                                      std::span<const DenseMatrix>(u));
    const SupervisedProblem p(y, Family::Gaussian);
    const TuckerFactors init = spectral_init(p, RankVector{{2, 2, 3}});
    CHECK(fro_norm(multilinear(init.core, std::span<const DenseMatrix>(init.factors)) - y) < 1e-9);
  }
  SUBCASE("all-zero Poisson data normalizes to log(1/2)") {
    const SupervisedProblem p(DenseTensor({3, 3, 2}), Family::Poisson);
    const TuckerFactors init = spectral_init(p, RankVector{{1, 1, 1}});
    const DenseTensor rec = multilinear(init.core, std::span<const DenseMatrix>(init.factors));
    for (double v : rec.values()) CHECK(v == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  }
  SUBCASE("triangular push-through matches the HOSVD reconstruction scaled by R^-1") {
    const SupervisedProblem p = small_problem(Family::Gaussian, rng, {6, 4, 5});
    const RankVector r{{2, 2, 2}};
    const TuckerFactors init = spectral_init(p, r);
    for (const auto& f : init.factors) CHECK(orthonormality_defect(f) < 1e-10);
    DenseTensor bbar = p.y();
    std::vector<DenseMatrix> rinv;
    for (std::size_t k = 0; k < 3; ++k) {
      const QrResult qr = thin_qr(p.feature_matrix(k));
      bbar = ttm_transposed(bbar, qr.q, k);
      rinv.push_back(qr.r.inverse());
    }
    const TuckerFactors h = hosvd(bbar, r.r);
    const DenseTensor expect = multilinear(
        multilinear(h.core, std::span<const DenseMatrix>(h.factors)),
        std::span<const DenseMatrix>(rinv));
    CHECK(rel(multilinear(init.core, std::span<const DenseMatrix>(init.factors)), expect) < 1e-8);
  }
  SUBCASE("noiseless simulated problem recovers the factor spans") {
    SimSpec spec{{20, 20, 20}, {8, 8, 8}, RankVector{{2, 2, 2}}, Family::Gaussian, 10.0, 17};
    const SimInstance sim = generate_noiseless(spec);
    const TuckerFactors init = spectral_init(sim.problem, spec.rank);
    for (std::size_t k = 0; k < 3; ++k) CHECK(sin_theta(sim.truth.factors[k], init.factors[k]) < 0.05);
  }
}

TEST_CASE("random initialization") {
  Rng rng(9);
  const SupervisedProblem p = small_problem(Family::Poisson, rng);
  const RankVector r{{3, 2, 2}};
  const TuckerFactors a = random_init(p, r, 5);
  const TuckerFactors b = random_init(p, r, 5);
  const TuckerFactors c = random_init(p, r, 6);
  CHECK(a.core == b.core);
  CHECK(a.factors == b.factors);
  CHECK(a.core != c.core);
  for (const auto& f : a.factors) CHECK(orthonormality_defect(f) < 1e-10);
  for (double v : a.core.values()) CHECK(std::abs(v) <= 1.0);
  CHECK_THROWS_AS(random_init(p, RankVector{{4, 2, 2}}, 1), std::invalid_argument);
}

TEST_CASE("fit recovers an exact low-rank Gaussian tensor in one sweep") {
  Rng rng(10);
  const std::vector<DenseMatrix> u{haar_orthonormal(6, 2, rng), haar_orthonormal(5, 2, rng),
                                   haar_orthonormal(4, 2, rng)};
  const DenseTensor y =
      multilinear(gaussian_tensor({2, 2, 2}, rng, 3.0), std::span<const DenseMatrix>(u));
  const SupervisedProblem p(y, Family::Gaussian);
  FitConfig cfg;
  cfg.rank = RankVector{{2, 2, 2}};
  cfg.init = InitKind::Spectral;
  cfg.max_outer_iters = 1;
  const StdFit f = fit(p, cfg);
  CHECK(rel(f.coefficient, y) < 1e-8);
}

TEST_CASE("saturated Gaussian fit reproduces the data") {
  Rng rng(11);
  const DenseTensor y = gaussian_tensor({3, 3, 2}, rng);
  const SupervisedProblem p(y, Family::Gaussian);
  FitConfig cfg;
  cfg.rank = RankVector{{3, 3, 2}};
  cfg.init = InitKind::Random;
  const StdFit f = fit(p, cfg);
  CHECK(fro_norm(f.coefficient - y) < 1e-9);
}

TEST_CASE("fit on noiseless simulated data recovers the coefficient") {
  SimSpec spec{{20, 20, 20}, {8, 8, 8}, RankVector{{3, 3, 3}}, Family::Gaussian, 10.0, 23};
  const SimInstance sim = generate_noiseless(spec);
  FitConfig cfg;
  cfg.rank = spec.rank;
  cfg.outer_tol = 1e-12;
  const StdFit f = fit(sim.problem, cfg);
  CHECK(f.n_outer_iters <= 50);
  CHECK(rel(f.coefficient, sim.truth.coefficient) < 1e-6);
  const double truth = objective(sim.problem, sim.truth.core, sim.truth.factors);
  CHECK(f.final_objective() >= truth - 1e-6 * std::abs(truth));
}

TEST_CASE("fit invariants across families and initializations") {
  Rng rng(12);
  for (Family fam : kFamilies)
    for (InitKind init : {InitKind::Spectral, InitKind::Random, InitKind::Both}) {
      CAPTURE(to_string(fam));
      CAPTURE(to_string(init));
      SimSpec spec{{8, 7, 6}, {4, std::nullopt, 3}, RankVector{{2, 2, 2}}, fam, 3.0,
                   static_cast<std::uint64_t>(rng())};
      const SimInstance sim = generate(spec);
      FitConfig cfg;
      cfg.rank = spec.rank;
      cfg.init = init;
      cfg.seed = 99;
      cfg.glm.predictor_bound = 10.0;
      const StdFit f = fit(sim.problem, cfg);
      for (std::size_t i = 1; i < f.trajectory.size(); ++i)
        CHECK(f.trajectory[i] >= f.trajectory[i - 1] - 1e-8);
      for (const auto& m : f.factors) CHECK(orthonormality_defect(m) < 1e-8);
      CHECK(rel(multilinear(f.core, std::span<const DenseMatrix>(f.factors)), f.coefficient) < 1e-10);
      CHECK(max_norm(f.linear_predictor) <= 10.0);
      CHECK(f.trajectory.size() == static_cast<std::size_t>(f.n_outer_iters) + 1);
      CHECK(f.final_objective() ==
            doctest::Approx(objective(sim.problem, f.core, f.factors)).epsilon(1e-10));
      if (init != InitKind::Both) CHECK(f.init_used == init);
    }
}

TEST_CASE("both initializations keep the better run") {
  SimSpec spec{{10, 9, 8}, {5, 4, 4}, RankVector{{2, 2, 2}}, Family::Poisson, 2.0, 4};
  const SimInstance sim = generate(spec);
  FitConfig cfg;
  cfg.rank = spec.rank;
  cfg.seed = 7;
  cfg.init = InitKind::Spectral;
  const StdFit s = fit(sim.problem, cfg);
  cfg.init = InitKind::Random;
  const StdFit r = fit(sim.problem, cfg);
  cfg.init = InitKind::Both;
  const StdFit b = fit(sim.problem, cfg);
  CHECK(b.final_objective() == std::max(s.final_objective(), r.final_objective()));
  CHECK(b.init_used == (r.final_objective() > s.final_objective() ? InitKind::Random
                                                                    : InitKind::Spectral));
}

TEST_CASE("fit is deterministic") {
  SimSpec spec{{7, 6, 5}, {3, 3, std::nullopt}, RankVector{{2, 2, 2}}, Family::Bernoulli, 3.0, 8};
  const SimInstance sim = generate(spec);
  FitConfig cfg;
  cfg.rank = spec.rank;
  cfg.seed = 3;
  const StdFit a = fit(sim.problem, cfg);
  const StdFit b = fit(sim.problem, cfg);
  CHECK(a.coefficient == b.coefficient);
  CHECK(a.trajectory == b.trajectory);
}

TEST_CASE("rotating the features and the start leaves the fitted predictor unchanged") {
  Rng rng(13);
  for (Family fam : kFamilies) {
    CAPTURE(to_string(fam));
    SimSpec spec{{9, 8, 7}, {4, 3, 3}, RankVector{{2, 2, 2}}, fam, 3.0, 30};
    const SimInstance sim = generate(spec);
    const SupervisedProblem& p = sim.problem;
    std::vector<DenseMatrix> rots;
    std::vector<std::optional<DenseMatrix>> feats;
    TuckerFactors start = random_init(p, spec.rank, 1);
    TuckerFactors rotated_start = start;
    for (std::size_t k = 0; k < 3; ++k) {
      const DenseMatrix o = haar_orthonormal(p.feature_dim(k), p.feature_dim(k), rng);
      feats.push_back(DenseMatrix(p.feature_matrix(k) * o));
      rotated_start.factors[k] = o.transpose() * start.factors[k];
    }
    const SupervisedProblem q(p.y(), feats, fam);
    FitConfig cfg;
    cfg.rank = spec.rank;
    cfg.outer_tol = 1e-10;
    cfg.max_outer_iters = 200;
    const StdFit a = fit_from(p, start, cfg);
    const StdFit b = fit_from(q, rotated_start, cfg);
    CHECK(rel(b.linear_predictor, a.linear_predictor) < 1e-6);
  }
}

TEST_CASE("degenerate Bernoulli data stays inside the predictor bound") {
  const SupervisedProblem p(DenseTensor({4, 4, 3}), Family::Bernoulli);
  FitConfig cfg;
  cfg.rank = RankVector{{1, 1, 1}};
  cfg.glm.predictor_bound = 6.0;
  const StdFit f = fit(p, cfg);
  CHECK(max_norm(f.linear_predictor) <= 6.0);
  CHECK(std::isfinite(f.final_objective()));
}

TEST_CASE("fit_from rejects a mismatched start") {
  Rng rng(14);
  const SupervisedProblem p = small_problem(Family::Gaussian, rng);
  FitConfig cfg;
  cfg.rank = RankVector{{2, 2, 2}};
  TuckerFactors s = random_init(p, cfg.rank, 1);
  s.factors[1] = DenseMatrix::Identity(3, 3);
  CHECK_THROWS_AS(fit_from(p, s, cfg), std::invalid_argument);
  cfg.max_outer_iters = 0;
  CHECK_THROWS_AS(fit(p, cfg), std::invalid_argument);
}
