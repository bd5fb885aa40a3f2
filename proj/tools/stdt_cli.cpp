// Command-line front end: simulate, fit, select-rank, evaluate, experiment.
//
// Exit codes: 0 success, 2 usage error, 3 data/domain error, 4 numerical failure.

#include "stdt/decompose.hpp"
#include "stdt/errors.hpp"
#include "stdt/experiments.hpp"
#include "stdt/io.hpp"
#include "stdt/metrics.hpp"
#include "stdt/rank_select.hpp"
#include "stdt/simulate.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

namespace {

using namespace stdt;
namespace fs = std::filesystem;

constexpr int kUsageError = 2;
constexpr int kDataError = 3;
constexpr int kNumericalError = 4;

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(s.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::size_t parse_positive(const std::string& tok, const std::string& flag) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size() || v <= 0)
    throw std::invalid_argument(flag + ": '" + tok + "' is not a positive integer");
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> parse_sizes(const std::string& s, const std::string& flag) {
  std::vector<std::size_t> out;
  for (const auto& tok : split(s)) out.push_back(parse_positive(tok, flag));
  return out;
}

struct SimulateArgs {
  std::string model = "gaussian", dims, feature_dims, rank, out;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  bool noiseless = false;
};

struct FitArgs {
  std::string tensor, features, model = "gaussian", rank, init = "both", out;
  double alpha = 1e4;
  int max_iter = 50;
  double tol = 1e-4;
  std::uint64_t seed = 0;
};

struct SelectArgs {
  std::string tensor, features, model = "gaussian", center, out;
  int radius = 1;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  double alpha = 1e4;
};

struct EvalArgs {
  std::string fit, truth, out;
};

struct ExperimentArgs {
  std::string name, out;
  int reps = 10;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

int run_simulate(const SimulateArgs& a) {
  SimSpec spec;
  spec.family = parse_family(a.model);
  spec.dims = parse_sizes(a.dims, "--dims");
  for (const auto& tok : a.feature_dims.empty() ? std::vector<std::string>{} : split(a.feature_dims)) {
    if (tok == "identity")
      spec.feature_dims.emplace_back();
    else
      spec.feature_dims.emplace_back(parse_positive(tok, "--feature-dims"));
  }
  if (a.feature_dims.empty()) spec.feature_dims.resize(spec.dims.size());
  spec.rank.r = parse_sizes(a.rank, "--rank");
  spec.effect_size = a.alpha;
  spec.seed = a.seed;
  const SimInstance sim = a.noiseless ? generate_noiseless(spec) : generate(spec);
  io::save_simulation(a.out, spec, sim);
  std::cout << "wrote simulation to " << a.out << "\n";
  return 0;
}

FitConfig make_config(const std::string& init, double alpha, int max_iter, double tol,
                      std::uint64_t seed) {
  FitConfig cfg;
  cfg.init = parse_init(init);
  cfg.glm.predictor_bound = alpha;
  cfg.max_outer_iters = max_iter;
  cfg.outer_tol = tol;
  cfg.seed = seed;
  return cfg;
}

int run_fit(const FitArgs& a) {
  const Family fam = parse_family(a.model);
  const auto features = a.features.empty() ? std::vector<std::string>{} : split(a.features);
  const SupervisedProblem problem = io::load_problem(a.tensor, features, fam);
  FitConfig cfg = make_config(a.init, a.alpha, a.max_iter, a.tol, a.seed);
  cfg.rank.r = parse_sizes(a.rank, "--rank");
  const StdFit f = fit(problem, cfg);
  if (!std::isfinite(f.final_objective()))
    throw NumericalError("fit ended with a non-finite objective");
  io::save_bundle(a.out, io::make_fit_bundle(problem, cfg, f));
  std::cout << "init=" << to_string(f.init_used) << " iterations=" << f.n_outer_iters
            << " converged=" << (f.converged ? "true" : "false")
            << " objective=" << io::format_double(f.final_objective()) << "\n";
  return 0;
}

int run_select(const SelectArgs& a) {
  const Family fam = parse_family(a.model);
  const auto features = a.features.empty() ? std::vector<std::string>{} : split(a.features);
  const SupervisedProblem problem = io::load_problem(a.tensor, features, fam);
  FitConfig cfg = make_config("both", a.alpha, 50, 1e-4, a.seed);
  const RankVector center{parse_sizes(a.center, "--grid-center")};
  const BicTable table = grid_search(problem, center, a.radius, cfg, a.jobs);

  std::string csv;
  for (std::size_t k = 0; k < center.order(); ++k) csv += "rank_" + std::to_string(k + 1) + ",";
  csv += "loglik,p_e,bic,converged\n";
  for (const auto& e : table.entries) {
    for (auto r : e.rank.r) csv += std::to_string(r) + ",";
    csv += io::format_double(e.loglik) + "," + std::to_string(e.effective_params) + "," +
           io::format_double(e.bic) + "," + (e.converged ? "1" : "0") + "\n";
  }
  fs::create_directories(a.out);
  io::write_text(fs::path(a.out) / "bic_table.csv", csv);
  std::cout << table.selected.to_string() << "\n";
  return 0;
}

io::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

int run_evaluate(const EvalArgs& a) {
  const io::Bundle fitted = io::load_bundle(a.fit);
  fs::path truth_dir = a.truth;
  if (fs::is_directory(truth_dir / "truth")) truth_dir /= "truth";
  const io::Bundle truth = io::load_bundle(truth_dir);

  if (fitted.coefficient.dims() != truth.coefficient.dims() ||
      fitted.factors.size() != truth.factors.size())
    throw DomainError("fit and truth bundles have different shapes");
  for (std::size_t k = 0; k < fitted.factors.size(); ++k)
    if (fitted.factors[k].rows() != truth.factors[k].rows() ||
        fitted.factors[k].cols() != truth.factors[k].cols())
      throw DomainError("factor " + std::to_string(k + 1) + " differs in shape between fit and truth");

  const Family fam = parse_family(fitted.meta.at("family").get<std::string>());
  EvalReport rep;
  rep.mse_coefficient = mse(fitted.coefficient, truth.coefficient);
  rep.per_mode_sin_theta = angle_errors(fitted.factors, truth.factors);
  rep.max_sin_theta = 0.0;
  for (double s : rep.per_mode_sin_theta) rep.max_sin_theta = std::max(rep.max_sin_theta, s);
  rep.final_objective = fitted.meta.value("final_objective",
                                          std::numeric_limits<double>::quiet_NaN());
  if (fitted.linear_predictor && (truth.mean || truth.linear_predictor)) {
    DenseTensor fitted_mean = *fitted.linear_predictor;
    for (double& v : fitted_mean.values()) v = mean_value(fam, v);
    DenseTensor truth_mean = truth.mean ? *truth.mean : *truth.linear_predictor;
    if (!truth.mean)
      for (double& v : truth_mean.values()) v = mean_value(fam, v);
    if (fitted_mean.dims() != truth_mean.dims())
      throw DomainError("fit and truth predictors have different shapes");
    rep.response_error = response_error(fitted_mean, truth_mean);
  } else {
    rep.response_error = std::numeric_limits<double>::quiet_NaN();
  }

  io::json out = {{"mse_coefficient", rep.mse_coefficient},
                  {"per_mode_sin_theta", rep.per_mode_sin_theta},
                  {"max_sin_theta", rep.max_sin_theta},
                  {"response_error", json_number(rep.response_error)},
                  {"final_objective", json_number(rep.final_objective)}};
  const fs::path target = a.out.empty() ? fs::path(a.fit) / "metrics.json" : fs::path(a.out);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  io::write_json(target, out);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_experiment(const ExperimentArgs& a) {
  std::string csv;
  if (a.name == "fig2") {
    csv = experiments::to_csv(experiments::run_trajectories({}, a.reps, a.seed, a.jobs));
  } else if (a.name == "fig3") {
    csv = experiments::to_csv(experiments::run_error_scaling({}, a.reps, a.seed, a.jobs));
  } else if (a.name == "table3") {
    csv = experiments::to_csv(experiments::run_rank_selection({}, a.reps, a.seed, a.jobs));
  } else {
    throw std::invalid_argument("unknown experiment '" + a.name +
                                "' (expected fig2, fig3 or table3)");
  }
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  io::write_text(out, csv);
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supervised Tucker decomposition of exponential-family tensors"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a simulated data set");
  sim_cmd->add_option("--model", sim.model, "gaussian|bernoulli|poisson");
  sim_cmd->add_option("--dims", sim.dims, "Comma-separated tensor dimensions")->required();
  sim_cmd->add_option("--feature-dims", sim.feature_dims,
                      "Comma-separated p_k per mode; 'identity' for no features (default: all identity)");
  sim_cmd->add_option("--rank", sim.rank, "Comma-separated Tucker rank")->required();
  sim_cmd->add_option("--alpha", sim.alpha, "Effect size");
  sim_cmd->add_option("--seed", sim.seed, "Random seed");
  sim_cmd->add_flag("--noiseless", sim.noiseless, "Gaussian only: Y = alpha * Theta exactly");
  sim_cmd->add_option("--out", sim.out, "Output directory")->required();

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the decomposition to a tensor");
  fit_cmd->add_option("--tensor", fa.tensor, "Response tensor (.tns)")->required();
  fit_cmd->add_option("--features", fa.features,
                      "Comma-separated feature CSVs per mode; 'identity' for none");
  fit_cmd->add_option("--model", fa.model, "gaussian|bernoulli|poisson");
  fit_cmd->add_option("--rank", fa.rank, "Comma-separated Tucker rank")->required();
  fit_cmd->add_option("--init", fa.init, "spectral|random|both");
  fit_cmd->add_option("--alpha", fa.alpha, "Bound on the max-norm of the linear predictor");
  fit_cmd->add_option("--max-iter", fa.max_iter, "Maximum outer iterations");
  fit_cmd->add_option("--tol", fa.tol, "Relative objective change for convergence");
  fit_cmd->add_option("--seed", fa.seed, "Seed for random initialization");
  fit_cmd->add_option("--out", fa.out, "Output bundle directory")->required();

  SelectArgs sa;
  auto* sel_cmd = app.add_subcommand("select-rank", "BIC grid search over ranks");
  sel_cmd->add_option("--tensor", sa.tensor, "Response tensor (.tns)")->required();
  sel_cmd->add_option("--features", sa.features,
                      "Comma-separated feature CSVs per mode; 'identity' for none");
  sel_cmd->add_option("--model", sa.model, "gaussian|bernoulli|poisson");
  sel_cmd->add_option("--grid-center", sa.center, "Comma-separated center rank")->required();
  sel_cmd->add_option("--grid-radius", sa.radius, "Box radius around the center");
  sel_cmd->add_option("--seed", sa.seed, "Base seed");
  sel_cmd->add_option("--jobs", sa.jobs, "Worker threads");
  sel_cmd->add_option("--alpha", sa.alpha, "Bound on the max-norm of the linear predictor");
  sel_cmd->add_option("--out", sa.out, "Output directory for bic_table.csv")->required();

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compare a fit with the true parameters");
  eval_cmd->add_option("--fit", ea.fit, "Fit bundle directory")->required();
  eval_cmd->add_option("--truth", ea.truth, "Truth bundle (or simulation) directory")->required();
  eval_cmd->add_option("--out", ea.out, "metrics.json path (default: inside the fit bundle)");

  ExperimentArgs xa;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a replicated simulation experiment");
  exp_cmd->add_option("--name", xa.name, "fig2|fig3|table3")->required();
  exp_cmd->add_option("--reps", xa.reps, "Replicates per configuration");
  exp_cmd->add_option("--seed", xa.seed, "Base seed");
  exp_cmd->add_option("--jobs", xa.jobs, "Worker threads");
  exp_cmd->add_option("--out", xa.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*sim_cmd) return run_simulate(sim);
    if (*fit_cmd) return run_fit(fa);
    if (*sel_cmd) return run_select(sa);
    if (*eval_cmd) return run_evaluate(ea);
    if (*exp_cmd) return run_experiment(xa);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const RankDeficientError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalError;
  }
  return kUsageError;
}
