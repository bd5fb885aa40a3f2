#include "stdt/experiments.hpp"

#include "stdt/io.hpp"
#include "stdt/metrics.hpp"
#include "stdt/parallel.hpp"
#include "stdt/simulate.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace stdt::experiments {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SimSpec cube_spec(Family fam, std::size_t d, std::size_t p, const RankVector& rank, double alpha,
                  std::uint64_t seed) {
  return {{d, d, d}, {p, p, p}, rank, fam, alpha, seed};
}

std::string fmt(double v) { return io::format_double(v); }

}  // namespace

std::size_t feature_dim_for(std::size_t d) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.4 * static_cast<double>(d))));
}

std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t experiment, std::uint64_t cell,
                             int rep) {
  return mix(mix(mix(base) ^ experiment) ^ cell) ^ static_cast<std::uint64_t>(rep);
}

std::vector<TrajectoryRecord> run_trajectories(const TrajectoryGrid& grid, int reps,
                                               std::uint64_t seed, unsigned jobs) {
  std::vector<TrajectoryRecord> rows;
  for (Family fam : grid.families)
    for (std::size_t d : grid.dims)
      for (std::size_t r : grid.ranks)
        for (int rep = 0; rep < reps; ++rep) {
          TrajectoryRecord rec;
          rec.family = fam;
          rec.d = d;
          rec.p = feature_dim_for(d);
          rec.r = r;
          rec.rep = rep;
          rec.alpha = grid.alpha;
          rec.seed = replicate_seed(seed, 2, rows.size() / std::max(reps, 1), rep);
          rows.push_back(rec);
        }
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    TrajectoryRecord& rec = rows[i];
    const RankVector rank{{rec.r, rec.r, rec.r}};
    const SimInstance sim = generate(cube_spec(rec.family, rec.d, rec.p, rank, rec.alpha, rec.seed));
    FitConfig cfg;
    cfg.rank = rank;
    cfg.init = InitKind::Random;
    cfg.seed = mix(rec.seed);
    const StdFit f = fit(sim.problem, cfg);
    rec.trajectory = f.trajectory;
    rec.converged = f.converged;
    rec.n_outer_iters = f.n_outer_iters;
    rec.final_objective = f.final_objective();
    rec.truth_objective = objective(sim.problem, sim.truth.core, sim.truth.factors);
    rec.monotone = true;
    for (std::size_t t = 1; t < f.trajectory.size(); ++t) {
      if (f.trajectory[t] < f.trajectory[t - 1] - 1e-8) rec.monotone = false;
      const double prev = f.trajectory[t - 1];
      if (rec.iters_to_tol < 0 &&
          std::abs(f.trajectory[t] - prev) <= 1e-4 * std::max(std::abs(prev), 1.0))
        rec.iters_to_tol = static_cast<int>(t);
    }
  });
  return rows;
}

std::vector<ErrorRecord> run_error_scaling(const ErrorGrid& grid, int reps, std::uint64_t seed,
                                           unsigned jobs) {
  std::vector<ErrorRecord> rows;
  for (Family fam : grid.families)
    for (std::size_t d : grid.dims)
      for (int rep = 0; rep < reps; ++rep) {
        ErrorRecord rec;
        rec.family = fam;
        rec.d = d;
        rec.p = feature_dim_for(d);
        rec.r = grid.rank;
        rec.rep = rep;
        rec.alpha = grid.alpha;
        rec.seed = replicate_seed(seed, 3, rows.size() / std::max(reps, 1), rep);
        rows.push_back(rec);
      }
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    ErrorRecord& rec = rows[i];
    const RankVector rank{{rec.r, rec.r, rec.r}};
    const SimInstance sim = generate(cube_spec(rec.family, rec.d, rec.p, rank, rec.alpha, rec.seed));
    FitConfig cfg;
    cfg.rank = rank;
    cfg.init = InitKind::Both;
    cfg.seed = mix(rec.seed);
    const StdFit f = fit(sim.problem, cfg);
    rec.mse = mse(f.coefficient, sim.truth.coefficient);
    rec.relative_error = std::sqrt(rec.mse) / fro_norm(sim.truth.coefficient);
    const auto angles = angle_errors(f.factors, sim.truth.factors);
    rec.max_sin_theta = *std::max_element(angles.begin(), angles.end());
    DenseTensor fitted_mean = f.linear_predictor;
    for (double& v : fitted_mean.values()) v = mean_value(rec.family, v);
    rec.response_error = response_error(fitted_mean, sim.truth.mean);
    rec.final_objective = f.final_objective();
    rec.converged = f.converged;
    rec.init_used = std::string(to_string(f.init_used));
  });
  return rows;
}

std::vector<RankRecord> run_rank_selection(const RankGrid& grid, int reps, std::uint64_t seed,
                                           unsigned jobs) {
  std::vector<RankRecord> rows;
  for (int rep = 0; rep < reps; ++rep) {
    RankRecord rec;
    rec.d = grid.d;
    rec.p = feature_dim_for(grid.d);
    rec.true_rank = grid.true_rank;
    rec.rep = rep;
    rec.alpha = grid.alpha;
    rec.seed = replicate_seed(seed, 4, 0, rep);
    rows.push_back(rec);
  }
  // Candidates within a replicate are already independent; parallelize there
  // so a single replicate also benefits.
  for (RankRecord& rec : rows) {
    const std::size_t order = rec.true_rank.order();
    SimSpec spec{Dims(order, rec.d), std::vector<std::optional<std::size_t>>(order, rec.p),
                 rec.true_rank, Family::Gaussian, rec.alpha, rec.seed};
    const SimInstance sim = generate(spec);
    FitConfig cfg;
    cfg.init = InitKind::Both;
    cfg.seed = mix(rec.seed);
    const BicTable table = grid_search(sim.problem, rec.true_rank, grid.radius, cfg, jobs);
    rec.selected = table.selected;
    rec.n_candidates = table.entries.size();
    for (const auto& e : table.entries)
      if (e.rank == table.selected) rec.selected_bic = e.bic;
  }
  return rows;
}

std::string to_csv(const std::vector<TrajectoryRecord>& rows) {
  std::string out =
      "family,d,p,r,rep,seed,alpha,converged,n_outer_iters,iters_to_tol,monotone,"
      "final_objective,truth_objective,trajectory\n";
  for (const auto& r : rows) {
    std::string traj;
    for (std::size_t t = 0; t < r.trajectory.size(); ++t) {
      if (t) traj += ';';
      traj += fmt(r.trajectory[t]);
    }
    out += std::string(to_string(r.family)) + "," + std::to_string(r.d) + "," +
           std::to_string(r.p) + "," + std::to_string(r.r) + "," + std::to_string(r.rep) + "," +
           std::to_string(r.seed) + "," + fmt(r.alpha) + "," + (r.converged ? "1" : "0") + "," +
           std::to_string(r.n_outer_iters) + "," + std::to_string(r.iters_to_tol) + "," +
           (r.monotone ? "1" : "0") + "," + fmt(r.final_objective) + "," +
           fmt(r.truth_objective) + "," + traj + "\n";
  }
  return out;
}

std::string to_csv(const std::vector<ErrorRecord>& rows) {
  std::string out =
      "family,d,p,r,rep,seed,alpha,mse,relative_error,max_sin_theta,response_error,"
      "final_objective,converged,init_used\n";
  for (const auto& r : rows)
    out += std::string(to_string(r.family)) + "," + std::to_string(r.d) + "," +
           std::to_string(r.p) + "," + std::to_string(r.r) + "," + std::to_string(r.rep) + "," +
           std::to_string(r.seed) + "," + fmt(r.alpha) + "," + fmt(r.mse) + "," +
           fmt(r.relative_error) + "," + fmt(r.max_sin_theta) + "," + fmt(r.response_error) +
           "," + fmt(r.final_objective) + "," + (r.converged ? "1" : "0") + "," + r.init_used +
           "\n";
  return out;
}

std::string to_csv(const std::vector<RankRecord>& rows) {
  std::string out = "d,p,true_rank,rep,seed,alpha,selected_rank,";
  const std::size_t order = rows.empty() ? 0 : rows.front().true_rank.order();
  for (std::size_t k = 0; k < order; ++k) out += "selected_" + std::to_string(k + 1) + ",";
  out += "selected_bic,n_candidates\n";
  for (const auto& r : rows) {
    out += std::to_string(r.d) + "," + std::to_string(r.p) + "," + r.true_rank.to_string('x') +
           "," + std::to_string(r.rep) + "," + std::to_string(r.seed) + "," + fmt(r.alpha) + "," +
           r.selected.to_string('x') + ",";
    for (std::size_t k = 0; k < order; ++k) out += std::to_string(r.selected[k]) + ",";
    out += fmt(r.selected_bic) + "," + std::to_string(r.n_candidates) + "\n";
  }
  return out;
}

double error_slope(const std::vector<ErrorRecord>& rows, Family family) {
  std::map<std::size_t, std::pair<double, int>> by_dim;
  for (const auto& r : rows) {
    if (r.family != family) continue;
    auto& [sum, n] = by_dim[r.d];
    sum += r.mse;
    ++n;
  }
  if (by_dim.size() < 2) throw std::invalid_argument("error_slope: need at least two dimensions");
  std::vector<double> xs, ys;
  for (const auto& [d, acc] : by_dim) {
    xs.push_back(std::log(static_cast<double>(d)));
    ys.push_back(std::log(acc.first / acc.second));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace stdt::experiments
