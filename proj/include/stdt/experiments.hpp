#pragma once

#include "stdt/decompose.hpp"
#include "stdt/rank_select.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stdt::experiments {

/// Objective trajectories from random initialization, compared with the
/// objective at the true parameters.
struct TrajectoryRecord {
  Family family{};
  std::size_t d = 0, p = 0, r = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  bool converged = false;
  int n_outer_iters = 0;
  /// First outer iteration with relative objective change below 1e-4, or -1.
  int iters_to_tol = -1;
  bool monotone = false;
  double final_objective = 0.0;
  double truth_objective = 0.0;
  std::vector<double> trajectory;
};

/// Estimation error as the dimension grows.
struct ErrorRecord {
  Family family{};
  std::size_t d = 0, p = 0, r = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double mse = 0.0;
  double relative_error = 0.0;
  double max_sin_theta = 0.0;
  double response_error = 0.0;
  double final_objective = 0.0;
  bool converged = false;
  std::string init_used;
};

/// BIC rank selection on replicated data.
struct RankRecord {
  std::size_t d = 0, p = 0;
  RankVector true_rank;
  int rep = 0;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  RankVector selected;
  double selected_bic = 0.0;
  std::size_t n_candidates = 0;
};

struct TrajectoryGrid {
  std::vector<Family> families{Family::Gaussian, Family::Bernoulli, Family::Poisson};
  std::vector<std::size_t> dims{25, 30};
  std::vector<std::size_t> ranks{3, 6};
  double alpha = 4.0;
};

struct ErrorGrid {
  std::vector<Family> families{Family::Gaussian, Family::Poisson, Family::Bernoulli};
  std::vector<std::size_t> dims{30, 40, 50, 60};
  std::size_t rank = 2;
  double alpha = 10.0;
};

struct RankGrid {
  std::size_t d = 40;
  RankVector true_rank{{3, 3, 3}};
  int radius = 2;
  double alpha = 4.0;
};

/// p = 0.4 d, rounded to the nearest integer (at least 1).
std::size_t feature_dim_for(std::size_t d);

/// Seed for one replicate, a pure function of the inputs.
std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t experiment, std::uint64_t cell,
                             int rep);

std::vector<TrajectoryRecord> run_trajectories(const TrajectoryGrid& grid, int reps,
                                               std::uint64_t seed, unsigned jobs = 1);
std::vector<ErrorRecord> run_error_scaling(const ErrorGrid& grid, int reps, std::uint64_t seed,
                                           unsigned jobs = 1);
std::vector<RankRecord> run_rank_selection(const RankGrid& grid, int reps, std::uint64_t seed,
                                           unsigned jobs = 1);

std::string to_csv(const std::vector<TrajectoryRecord>& rows);
std::string to_csv(const std::vector<ErrorRecord>& rows);
std::string to_csv(const std::vector<RankRecord>& rows);

/// Least-squares slope of log(mean MSE) against log(d) for one family.
double error_slope(const std::vector<ErrorRecord>& rows, Family family);

}  // namespace stdt::experiments
