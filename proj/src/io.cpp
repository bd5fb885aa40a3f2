#include "stdt/io.hpp"

#include "stdt/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stdt::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view tok, const std::string& where) {
  tok = trim(tok);
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end || tok.empty())
    throw IoError("cannot parse '" + std::string(tok) + "' as a number (" + where + ")");
  if (!std::isfinite(v)) throw IoError("non-finite value (" + where + ")");
  return v;
}

std::size_t parse_count(std::string_view tok, const std::string& what) {
  std::size_t v = 0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end || tok.empty() || v == 0)
    throw IoError("invalid " + what + " '" + std::string(tok) + "'");
  return v;
}

// Whitespace tokenizer over a string_view.
class Tokens {
 public:
  explicit Tokens(std::string_view s) : s_(s) {}
  std::optional<std::string_view> next() {
    const auto b = s_.find_first_not_of(" \t\r\n", pos_);
    if (b == std::string_view::npos) return std::nullopt;
    auto e = s_.find_first_of(" \t\r\n", b);
    if (e == std::string_view::npos) e = s_.size();
    pos_ = e;
    return s_.substr(b, e - b);
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_tensor(const DenseTensor& t) {
  std::string out = "tns 1\n" + std::to_string(t.order()) + "\n";
  for (std::size_t k = 0; k < t.order(); ++k) {
    if (k) out += ' ';
    out += std::to_string(t.dim(k));
  }
  out += '\n';
  for (double v : t.values()) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

DenseTensor parse_tensor(std::string_view text) {
  const auto eol = text.find('\n');
  if (trim(text.substr(0, eol)) != "tns 1")
    throw IoError("tensor file must start with the header 'tns 1'");
  if (eol == std::string_view::npos) throw IoError("tensor file is truncated");
  Tokens tok(text.substr(eol + 1));
  const auto order_tok = tok.next();
  if (!order_tok) throw IoError("tensor file is missing its order");
  const std::size_t order = parse_count(*order_tok, "tensor order");
  Dims dims(order);
  for (auto& d : dims) {
    const auto t = tok.next();
    if (!t) throw IoError("tensor file is missing dimensions");
    d = parse_count(*t, "tensor dimension");
  }
  const std::size_t n = dims_product(dims);
  std::vector<double> values;
  values.reserve(n);
  while (auto t = tok.next()) {
    if (values.size() == n)
      throw IoError("tensor file has more than the " + std::to_string(n) + " expected values");
    values.push_back(parse_number(*t, "tensor value " + std::to_string(values.size() + 1)));
  }
  if (values.size() != n)
    throw IoError("tensor file has " + std::to_string(values.size()) + " values, dims require " +
                  std::to_string(n));
  return DenseTensor(std::move(dims), std::move(values));
}

std::string format_matrix(const DenseMatrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

DenseMatrix parse_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    const std::string_view line = trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      row.push_back(parse_number(line.substr(start, comma - start),
                                 "line " + std::to_string(line_no) + ", field " +
                                     std::to_string(row.size() + 1)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("matrix is not rectangular at line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("matrix file is empty");
  DenseMatrix m(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_tensor(const fs::path& path, const DenseTensor& t) {
  write_text(path, format_tensor(t));
}

DenseTensor read_tensor(const fs::path& path) {
  try {
    return parse_tensor(read_text(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_matrix(const fs::path& path, const DenseMatrix& m) {
  write_text(path, format_matrix(m));
}

DenseMatrix read_matrix(const fs::path& path) {
  try {
    return parse_matrix(read_text(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

namespace {

std::string factor_name(std::size_t k) { return "factor_" + std::to_string(k + 1) + ".csv"; }

}  // namespace

void save_bundle(const fs::path& dir, const Bundle& b) {
  fs::create_directories(dir);
  write_tensor(dir / "core.tns", b.core);
  for (std::size_t k = 0; k < b.factors.size(); ++k) write_matrix(dir / factor_name(k), b.factors[k]);
  write_tensor(dir / "coefficient.tns", b.coefficient);
  if (b.linear_predictor) write_tensor(dir / "linear_predictor.tns", *b.linear_predictor);
  if (b.mean) write_tensor(dir / "mean.tns", *b.mean);
  std::string traj = "iteration,objective\n";
  for (std::size_t i = 0; i < b.trajectory.size(); ++i)
    traj += std::to_string(i) + "," + format_double(b.trajectory[i]) + "\n";
  write_text(dir / "trajectory.csv", traj);
  write_json(dir / "meta.json", b.meta);
}

Bundle load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("bundle directory " + dir.string() + " not found");
  Bundle b;
  b.meta = read_json(dir / "meta.json");
  b.core = read_tensor(dir / "core.tns");
  for (std::size_t k = 0; k < b.core.order(); ++k) b.factors.push_back(read_matrix(dir / factor_name(k)));
  b.coefficient = read_tensor(dir / "coefficient.tns");
  if (fs::exists(dir / "linear_predictor.tns"))
    b.linear_predictor = read_tensor(dir / "linear_predictor.tns");
  if (fs::exists(dir / "mean.tns")) b.mean = read_tensor(dir / "mean.tns");
  if (fs::exists(dir / "trajectory.csv")) {
    const std::string text = read_text(dir / "trajectory.csv");
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw IoError("malformed trajectory.csv line: " + line);
      b.trajectory.push_back(parse_number(std::string_view(line).substr(comma + 1), "trajectory.csv"));
    }
  }
  return b;
}

json to_json(const GlmOptions& o) {
  json j = {{"max_newton_iters", o.max_newton_iters},
            {"tol", o.tol},
            {"ridge", o.ridge},
            {"max_halvings", o.max_halvings}};
  if (std::isfinite(o.predictor_bound))
    j["predictor_bound"] = o.predictor_bound;
  else
    j["predictor_bound"] = "inf";
  return j;
}

json to_json(const FitConfig& c) {
  return {{"rank", c.rank.r},
          {"init", std::string(to_string(c.init))},
          {"max_outer_iters", c.max_outer_iters},
          {"outer_tol", c.outer_tol},
          {"seed", c.seed},
          {"glm", to_json(c.glm)}};
}

Bundle make_fit_bundle(const SupervisedProblem& problem, const FitConfig& config,
                       const StdFit& fit) {
  Bundle b{fit.core, fit.factors, fit.coefficient, fit.linear_predictor, std::nullopt,
           fit.trajectory, json::object()};
  std::vector<bool> identity;
  for (std::size_t k = 0; k < problem.order(); ++k) identity.push_back(problem.is_identity(k));
  b.meta = {{"kind", "fit"},
            {"family", std::string(to_string(problem.family()))},
            {"dims", problem.dims()},
            {"feature_dims", problem.feature_dims()},
            {"identity_modes", identity},
            {"rank", config.rank.r},
            {"init", std::string(to_string(config.init))},
            {"init_used", std::string(to_string(fit.init_used))},
            {"seed", config.seed},
            {"converged", fit.converged},
            {"n_outer_iters", fit.n_outer_iters},
            {"final_objective", fit.final_objective()},
            {"config", to_json(config)}};
  return b;
}

void save_simulation(const fs::path& dir, const SimSpec& spec, const SimInstance& sim) {
  fs::create_directories(dir);
  const SupervisedProblem& problem = sim.problem;
  write_tensor(dir / "y.tns", problem.y());
  json feature_dims = json::array();
  std::vector<bool> identity;
  for (std::size_t k = 0; k < problem.order(); ++k) {
    identity.push_back(problem.is_identity(k));
    if (problem.is_identity(k)) {
      feature_dims.push_back("identity");
    } else {
      feature_dims.push_back(problem.feature_dim(k));
      write_matrix(dir / ("x_" + std::to_string(k + 1) + ".csv"), *problem.feature(k));
    }
  }
  const SimTruth& t = sim.truth;
  const double truth_objective = objective(problem, t.core, t.factors);
  Bundle truth{t.core,
               t.factors,
               t.coefficient,
               t.effect_size * t.theta,
               t.mean,
               {truth_objective},
               {{"kind", "truth"},
                {"family", std::string(to_string(spec.family))},
                {"rank", spec.rank.r},
                {"effect_size", spec.effect_size},
                {"final_objective", truth_objective}}};
  save_bundle(dir / "truth", truth);
  write_tensor(dir / "truth" / "theta.tns", t.theta);
  write_json(dir / "meta.json", {{"kind", "simulation"},
                                 {"model", std::string(to_string(spec.family))},
                                 {"dims", spec.dims},
                                 {"feature_dims", feature_dims},
                                 {"identity_modes", identity},
                                 {"rank", spec.rank.r},
                                 {"alpha", spec.effect_size},
                                 {"seed", spec.seed},
                                 {"truth_objective", truth_objective}});
}

SupervisedProblem load_problem(const fs::path& tensor, const std::vector<std::string>& features,
                               Family family) {
  DenseTensor y = read_tensor(tensor);
  std::vector<std::optional<DenseMatrix>> xs(y.order());
  if (!features.empty()) {
    if (features.size() != y.order())
      throw std::invalid_argument("got " + std::to_string(features.size()) +
                                  " feature entries for an order-" + std::to_string(y.order()) +
                                  " tensor");
    for (std::size_t k = 0; k < features.size(); ++k) {
      if (features[k] == "identity") continue;
      if (!fs::exists(features[k])) throw IoError("feature file " + features[k] + " not found");
      xs[k] = read_matrix(features[k]);
    }
  }
  return SupervisedProblem(std::move(y), std::move(xs), family);
}

}  // namespace stdt::io
