#pragma once

#include "stdt/family.hpp"
#include "stdt/linalg.hpp"
#include "stdt/tensor.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stdt {

/// Multilinear (Tucker) rank.
struct RankVector {
  std::vector<std::size_t> r;

  std::size_t order() const { return r.size(); }
  std::size_t operator[](std::size_t k) const { return r[k]; }
  std::size_t product() const { return dims_product(r); }
  /// Every r_k <= product of the other ranks.
  bool admissible() const { return rank_admissible(r); }
  std::string to_string(char sep = ',') const;

  friend auto operator<=>(const RankVector&, const RankVector&) = default;
};

/// Response tensor, per-mode feature matrices (nullopt = identity) and family.
///
/// Construction validates everything: feature rows match d_k, features have
/// full column rank, responses lie in the family's domain.
class SupervisedProblem {
 public:
  SupervisedProblem(DenseTensor y, std::vector<std::optional<DenseMatrix>> features,
                    Family family);

  /// All-identity problem (classical unsupervised decomposition).
  SupervisedProblem(DenseTensor y, Family family);

  const DenseTensor& y() const { return y_; }
  Family family() const { return family_; }
  std::size_t order() const { return y_.order(); }
  const Dims& dims() const { return y_.dims(); }

  bool is_identity(std::size_t mode) const { return !features_.at(mode).has_value(); }
  const std::optional<DenseMatrix>& feature(std::size_t mode) const {
    return features_.at(mode);
  }
  /// p_k; equals d_k for identity modes.
  std::size_t feature_dim(std::size_t mode) const;
  std::vector<std::size_t> feature_dims() const;

  /// X_k * m, or m itself for identity modes.
  DenseMatrix apply_feature(std::size_t mode, const DenseMatrix& m) const;
  /// X_k materialized (identity for identity modes).
  DenseMatrix feature_matrix(std::size_t mode) const;

 private:
  DenseTensor y_;
  std::vector<std::optional<DenseMatrix>> features_;
  Family family_;
};

enum class InitKind { Spectral, Random, Both };

std::string_view to_string(InitKind kind);
InitKind parse_init(std::string_view name);

struct FitConfig {
  RankVector rank;
  InitKind init = InitKind::Both;
  int max_outer_iters = 50;
  double outer_tol = 1e-4;
  GlmOptions glm{};
  std::uint64_t seed = 0;
};

struct StdFit {
  DenseTensor core;
  std::vector<DenseMatrix> factors;
  DenseTensor coefficient;       // core x {M_1..M_K}
  DenseTensor linear_predictor;  // coefficient x {X_1..X_K}
  /// Objective at the initialization followed by one value per outer sweep.
  std::vector<double> trajectory;
  bool converged = false;
  int n_outer_iters = 0;
  /// Initialization that produced this fit (never Both).
  InitKind init_used = InitKind::Spectral;

  double final_objective() const { return trajectory.back(); }
};

/// Throws std::invalid_argument when the rank does not fit the problem
/// (length, 1 <= r_k <= p_k, admissibility).
void validate_rank(const SupervisedProblem& problem, const RankVector& rank);

/// Linear predictor core x {X_1 M_1, ..., X_K M_K}.
DenseTensor linear_predictor(const SupervisedProblem& problem, const DenseTensor& core,
                             const std::vector<DenseMatrix>& factors);

/// Quasi log-likelihood at (core, factors).
double objective(const SupervisedProblem& problem, const DenseTensor& core,
                 const std::vector<DenseMatrix>& factors);

TuckerFactors spectral_init(const SupervisedProblem& problem, const RankVector& rank);
TuckerFactors random_init(const SupervisedProblem& problem, const RankVector& rank,
                          std::uint64_t seed);

/// Alternating block updates from a given starting point.
StdFit fit_from(const SupervisedProblem& problem, TuckerFactors start,
                const FitConfig& config);

/// Full fit including initialization; InitKind::Both keeps the run with the
/// larger final objective.
StdFit fit(const SupervisedProblem& problem, const FitConfig& config);

/// Explicit design for the mode-k factor update: vec(Theta) = design * vec(M_k)
/// (vec column-major, Theta in storage order).
DenseMatrix block_design(const SupervisedProblem& problem, const DenseTensor& core,
                         const std::vector<DenseMatrix>& factors, std::size_t mode);

/// Explicit design for the core update: vec(Theta) = design * vec(core).
DenseMatrix core_design(const SupervisedProblem& problem,
                        const std::vector<DenseMatrix>& factors);

/// Structured designs used by the fit; same semantics as the explicit ones.
class FactorDesign final : public GlmDesign {
 public:
  FactorDesign(const SupervisedProblem& problem, const DenseTensor& core,
               const std::vector<DenseMatrix>& factors, std::size_t mode);
  Eigen::Index rows() const override;
  Eigen::Index cols() const override;
  DenseVector predict(const DenseVector& beta) const override;
  DenseMatrix weighted_gram(const DenseVector& w) const override;
  DenseVector adjoint(const DenseVector& r) const override;

 private:
  Dims dims_;
  std::size_t mode_;
  DenseMatrix x_;  // d_k x p_k
  DenseMatrix g_;  // r_k x prod_{j != k} d_j
  std::size_t rank_;
};

class CoreDesign final : public GlmDesign {
 public:
  CoreDesign(const SupervisedProblem& problem, const std::vector<DenseMatrix>& factors);
  Eigen::Index rows() const override;
  Eigen::Index cols() const override;
  DenseVector predict(const DenseVector& beta) const override;
  DenseMatrix weighted_gram(const DenseVector& w) const override;
  DenseVector adjoint(const DenseVector& r) const override;

 private:
  Dims dims_;
  Dims core_dims_;
  std::vector<DenseMatrix> reduced_;  // X_k M_k
};

}  // namespace stdt
