#include "stdt/rank_select.hpp"

#include "stdt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stdt {

long long effective_params(const RankVector& rank,
                           const std::vector<std::size_t>& feature_dims) {
  if (rank.order() != feature_dims.size())
    throw std::invalid_argument("effective_params: rank and feature dims differ in length");
  long long total = 0;
  long long prod = 1;
  for (std::size_t k = 0; k < rank.order(); ++k) {
    if (rank[k] > feature_dims[k])
      throw std::invalid_argument("effective_params: r_" + std::to_string(k + 1) +
                                  " exceeds p_" + std::to_string(k + 1));
    const auto r = static_cast<long long>(rank[k]);
    total += (static_cast<long long>(feature_dims[k]) - r) * r;
    prod *= r;
  }
  return total + prod;
}

double bic_value(double loglik, long long effective_params, const Dims& dims) {
  return -2.0 * loglik +
         static_cast<double>(effective_params) * std::log(static_cast<double>(dims_product(dims)));
}

BicEntry bic(const SupervisedProblem& problem, const StdFit& fit) {
  BicEntry e;
  e.rank.r = fit.core.dims();
  e.loglik = fit.final_objective();
  e.effective_params = effective_params(e.rank, problem.feature_dims());
  e.bic = bic_value(e.loglik, e.effective_params, problem.dims());
  e.converged = fit.converged;
  return e;
}

std::vector<RankVector> candidate_ranks(const RankVector& center, int radius,
                                        const std::vector<std::size_t>& feature_dims) {
  if (radius < 0) throw std::invalid_argument("grid radius must be nonnegative");
  const std::size_t order = center.order();
  if (order == 0 || feature_dims.size() != order)
    throw std::invalid_argument("grid center and feature dims differ in length");
  std::vector<std::size_t> lo(order), hi(order);
  for (std::size_t k = 0; k < order; ++k) {
    const long long c = static_cast<long long>(center[k]);
    lo[k] = static_cast<std::size_t>(std::max(1LL, c - radius));
    hi[k] = static_cast<std::size_t>(
        std::min(static_cast<long long>(feature_dims[k]), c + radius));
    if (lo[k] > hi[k]) return {};
  }
  // Odometer with the first mode slowest gives lexicographic order.
  std::vector<RankVector> out;
  RankVector cur{lo};
  while (true) {
    if (cur.admissible()) out.push_back(cur);
    std::size_t k = order;
    while (k > 0) {
      --k;
      if (cur.r[k] < hi[k]) {
        ++cur.r[k];
        for (std::size_t j = k + 1; j < order; ++j) cur.r[j] = lo[j];
        break;
      }
      if (k == 0) return out;
    }
  }
}

std::uint64_t candidate_seed(std::uint64_t base, const RankVector& rank) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (auto r : rank.r) h = mix(h ^ static_cast<std::uint64_t>(r));
  return h;
}

BicTable grid_search(const SupervisedProblem& problem, const RankVector& center, int radius,
                     const FitConfig& config, unsigned jobs) {
  const auto candidates = candidate_ranks(center, radius, problem.feature_dims());
  if (candidates.empty())
    throw std::invalid_argument("rank grid around (" + center.to_string() +
                                ") with radius " + std::to_string(radius) +
                                " has no valid candidates");
  BicTable table;
  table.entries.resize(candidates.size());
  parallel_for(candidates.size(), jobs, [&](std::size_t i) {
    FitConfig cfg = config;
    cfg.rank = candidates[i];
    cfg.seed = candidate_seed(config.seed, candidates[i]);
    table.entries[i] = bic(problem, fit(problem, cfg));
  });

  const BicEntry* best = &table.entries.front();
  for (const auto& e : table.entries)
    if (e.bic < best->bic) best = &e;  // strict: earlier (smaller) rank wins ties
  table.selected = best->rank;
  return table;
}

}  // namespace stdt
