#pragma once

#include "stdt/decompose.hpp"

#include <cstdint>
#include <vector>

namespace stdt {

struct BicEntry {
  RankVector rank;
  double bic = 0.0;
  double loglik = 0.0;
  long long effective_params = 0;
  bool converged = false;
};

struct BicTable {
  std::vector<BicEntry> entries;  // sorted by rank
  RankVector selected;
};

/// sum_k (p_k - r_k) r_k + prod_k r_k. Throws when some r_k > p_k.
long long effective_params(const RankVector& rank, const std::vector<std::size_t>& feature_dims);

/// -2 loglik + p_e log(prod d_k).
double bic_value(double loglik, long long effective_params, const Dims& dims);

BicEntry bic(const SupervisedProblem& problem, const StdFit& fit);

/// Ranks in the box center +/- radius, clipped to [1, p_k], with inadmissible
/// ranks removed; lexicographically ordered.
std::vector<RankVector> candidate_ranks(const RankVector& center, int radius,
                                        const std::vector<std::size_t>& feature_dims);

/// Per-candidate seed, a pure function of the base seed and the rank.
std::uint64_t candidate_seed(std::uint64_t base, const RankVector& rank);

/// Fits every candidate (each with its own derived seed; config.rank is
/// ignored) on up to `jobs` threads and selects the minimum BIC. Ties go to
/// the lexicographically smallest rank.
BicTable grid_search(const SupervisedProblem& problem, const RankVector& center, int radius,
                     const FitConfig& config, unsigned jobs = 1);

}  // namespace stdt
