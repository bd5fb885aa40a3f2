#include "stdt/experiments.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace stdt;
using namespace stdt::experiments;

TEST_CASE("feature dimension and replicate seeds") {
  CHECK(feature_dim_for(25) == 10);
  CHECK(feature_dim_for(40) == 16);
  CHECK(feature_dim_for(1) == 1);
  CHECK(feature_dim_for(2) == 1);
  std::set<std::uint64_t> seen;
  for (std::uint64_t cell = 0; cell < 8; ++cell)
    for (int rep = 0; rep < 10; ++rep) {
      CHECK(replicate_seed(7, 1, cell, rep) == replicate_seed(7, 1, cell, rep));
      seen.insert(replicate_seed(7, 1, cell, rep));
    }
  CHECK(seen.size() == 80);
  CHECK(replicate_seed(7, 1, 0, 0) != replicate_seed(8, 1, 0, 0));
  CHECK(replicate_seed(7, 1, 0, 0) != replicate_seed(7, 2, 0, 0));
}

TEST_CASE("error slope") {
  std::vector<ErrorRecord> rows;
  for (std::size_t d : {30, 40, 50, 60})
    for (int rep = 0; rep < 3; ++rep) {
      ErrorRecord r;
      r.family = Family::Poisson;
      r.d = d;
      r.rep = rep;
      // mean over replicates is 5 / d^2
      r.mse = 5.0 / static_cast<double>(d * d) * (rep == 0 ? 0.5 : rep == 1 ? 1.0 : 1.5);
      rows.push_back(r);
      r.family = Family::Gaussian;
      r.mse = 2.0 / static_cast<double>(d);
      rows.push_back(r);
    }
  CHECK(error_slope(rows, Family::Poisson) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(error_slope(rows, Family::Gaussian) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS(error_slope(rows, Family::Bernoulli));
}

TEST_CASE("csv headers and row counts") {
  std::vector<RankRecord> rows(2);
  rows[0].true_rank = rows[1].true_rank = RankVector{{3, 3, 3}};
  rows[0].selected = rows[1].selected = RankVector{{3, 2, 3}};
  const std::string csv = to_csv(rows);
  CHECK(csv.rfind("d,p,true_rank,rep,seed,alpha,selected_rank,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("3x2x3,3,2,3") != std::string::npos);
  CHECK(to_csv(std::vector<TrajectoryRecord>{}).rfind("family,d,p,r,rep,", 0) == 0);
  const std::string empty = to_csv(std::vector<ErrorRecord>{});
  CHECK(std::count(empty.begin(), empty.end(), '\n') == 1);
}
