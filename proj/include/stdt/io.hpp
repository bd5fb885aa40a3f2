#pragma once

#include "stdt/decompose.hpp"
#include "stdt/simulate.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stdt::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// `tns 1` text format: header, order, dims, then values in storage order.
std::string format_tensor(const DenseTensor& t);
DenseTensor parse_tensor(std::string_view text);
void write_tensor(const fs::path& path, const DenseTensor& t);
DenseTensor read_tensor(const fs::path& path);

/// Headerless CSV, one matrix row per line.
std::string format_matrix(const DenseMatrix& m);
DenseMatrix parse_matrix(std::string_view text);
void write_matrix(const fs::path& path, const DenseMatrix& m);
DenseMatrix read_matrix(const fs::path& path);

void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);
void write_text(const fs::path& path, std::string_view text);
std::string read_text(const fs::path& path);

/// Shortest round-tripping text for a double (17 significant digits).
std::string format_double(double v);

/// Fitted (or true) model on disk: core.tns, factor_k.csv, coefficient.tns,
/// linear_predictor.tns, trajectory.csv, meta.json.
struct Bundle {
  DenseTensor core;
  std::vector<DenseMatrix> factors;
  DenseTensor coefficient;
  std::optional<DenseTensor> linear_predictor;
  std::optional<DenseTensor> mean;
  std::vector<double> trajectory;
  json meta;
};

void save_bundle(const fs::path& dir, const Bundle& bundle);
Bundle load_bundle(const fs::path& dir);

/// Bundle for a fit; meta gets family, rank, convergence flags, final
/// objective, winning initialization and the effective configuration.
Bundle make_fit_bundle(const SupervisedProblem& problem, const FitConfig& config,
                       const StdFit& fit);

/// Simulation output: y.tns, x_k.csv for non-identity modes, truth/ bundle,
/// meta.json.
void save_simulation(const fs::path& dir, const SimSpec& spec, const SimInstance& sim);

/// Loads a problem from a tensor file and per-mode feature files; an entry
/// equal to "identity" marks an identity mode. An empty feature list means
/// all modes are identity.
SupervisedProblem load_problem(const fs::path& tensor, const std::vector<std::string>& features,
                               Family family);

json to_json(const GlmOptions& opts);
json to_json(const FitConfig& config);

}  // namespace stdt::io
