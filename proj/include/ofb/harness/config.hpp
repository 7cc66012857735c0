#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ofb/adp.hpp"
#include "ofb/error.hpp"
#include "ofb/lti.hpp"

namespace ofb::harness {

using json = nlohmann::json;

enum class Algorithm { vi, pi, si };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::vi: return "vi";
    case Algorithm::pi: return "pi";
    case Algorithm::si: return "si";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s, const std::string& field = "algorithm") {
  if (s == "vi") return Algorithm::vi;
  if (s == "pi") return Algorithm::pi;
  if (s == "si") return Algorithm::si;
  throw ConfigError(field, "expected one of vi|pi|si, got '" + s + "'");
}

struct ExperimentConfig {
  std::string name;
  Matrix A, B, C;
  Matrix Qy, R;
  std::optional<Matrix> Q_eps;
  std::vector<Complex> observer_poles;
  std::optional<Matrix> A_eps;
  Vector eta0;
  Vector x0;
  NoiseSpec noise;
  Algorithm algorithm = Algorithm::vi;
  std::optional<Matrix> P0;
  std::optional<Matrix> K0;
  double eps_stop = 1e-3;
  long max_steps = 2000;
  long max_iters = 10000;
  std::uint64_t seed = 0;
  long horizon = 200;
  BilinearForm bilinear_form = BilinearForm::plain;
  StopNorm stop_norm = StopNorm::spectral;
  double tol_rank = kAutoRankTol;
  double tol_stab = 1e-9;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }
  Eigen::Index nz() const { return n() * (m() + p() + 1); }

  Matrix behavior_gain() const { return K0 ? *K0 : Matrix::Zero(m(), nz()); }
};

namespace detail {

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(path + key, "missing");
  return j.at(key);
}

inline double as_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  return j.get<double>();
}

inline Matrix as_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty nested array");
  if (!j[0].is_array()) {
    Matrix M(1, static_cast<Eigen::Index>(j.size()));
    for (std::size_t c = 0; c < j.size(); ++c)
      M(0, static_cast<Eigen::Index>(c)) = as_number(j[c], field);
    return M;
  }
  const std::size_t cols = j[0].size();
  Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(field, "ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c)
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as_number(j[r][c], field);
  }
  return M;
}

inline Vector as_vector(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = as_number(j[i], field);
  return v;
}

// A scalar s means s * I of the given size.
inline Matrix as_square(const json& j, Eigen::Index size, const std::string& field) {
  if (j.is_number()) return j.get<double>() * Matrix::Identity(size, size);
  Matrix M = as_matrix(j, field);
  if (M.rows() != size || M.cols() != size)
    throw ConfigError(field, "expected a scalar or a " + std::to_string(size) + "x" +
                                 std::to_string(size) + " matrix");
  return M;
}

inline std::pair<double, double> as_range(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(field, "expected [lo, hi]");
  return {as_number(j[0], field), as_number(j[1], field)};
}

inline json matrix_json(const Matrix& M) {
  json out = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    out.push_back(row);
  }
  return out;
}

inline json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  const Eigen::Index n = c.A.rows();
  if (n == 0 || c.A.cols() != n) throw ConfigError("plant.A", "must be square and non-empty");
  if (c.B.rows() != n) throw ConfigError("plant.B", "must have as many rows as A");
  if (c.C.cols() != n) throw ConfigError("plant.C", "must have as many columns as A");
  if (c.Qy.rows() != c.p() || c.Qy.cols() != c.p()) throw ConfigError("weights.Qy", "must be p x p");
  if (c.R.rows() != c.m() || c.R.cols() != c.m()) throw ConfigError("weights.R", "must be m x m");
  if (c.Q_eps && (c.Q_eps->rows() != c.nz() || c.Q_eps->cols() != c.nz()))
    throw ConfigError("weights.Q_eps", "must be n_z x n_z");
  if (static_cast<Eigen::Index>(c.observer_poles.size()) != n)
    throw ConfigError("observer_poles", "need exactly n poles");
  for (const Complex& z : c.observer_poles)
    if (!(std::abs(z) < 1.0)) throw ConfigError("observer_poles", "every pole must lie strictly inside the unit circle");
  if (c.A_eps && (c.A_eps->rows() != n || c.A_eps->cols() != n))
    throw ConfigError("A_eps", "must be n x n");
  if (c.eta0.size() != c.nz()) throw ConfigError("eta0", "must have length n(m+p+1)");
  if (c.x0.size() != n) throw ConfigError("x0", "must have length n");
  try {
    c.noise.validate();
  } catch (const Error& e) {
    throw ConfigError("noise", e.what());
  }
  if (c.K0 && (c.K0->rows() != c.m() || c.K0->cols() != c.nz()))
    throw ConfigError("K0", "must be m x n_z");
  if (c.P0 && (c.P0->rows() != c.nz() || c.P0->cols() != c.nz()))
    throw ConfigError("P0", "must be n_z x n_z");
  switch (c.algorithm) {
    case Algorithm::vi:
    case Algorithm::si:
      if (!c.P0) throw ConfigError("P0", "required for algorithm " + std::string(to_string(c.algorithm)));
      break;
    case Algorithm::pi:
      if (!c.K0) throw ConfigError("K0", "required for algorithm pi");
      break;
  }
  if (c.algorithm == Algorithm::si && !c.Q_eps)
    throw ConfigError("weights.Q_eps", "required for algorithm si");
  if (!(c.eps_stop > 0)) throw ConfigError("eps_stop", "must be positive");
  if (c.max_steps < 1) throw ConfigError("caps.max_steps", "must be positive");
  if (c.max_iters < 1) throw ConfigError("caps.max_iters", "must be positive");
  if (c.horizon < 1) throw ConfigError("horizon", "must be positive");
}

inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  ExperimentConfig c;
  c.name = j.value("name", std::string());
  const json& plant = require(j, "plant", "");
  c.A = as_matrix(require(plant, "A", "plant."), "plant.A");
  const json& bj = require(plant, "B", "plant.");
  c.B = as_matrix(bj, "plant.B");
  if (bj.is_array() && !bj.empty() && !bj[0].is_array()) c.B.transposeInPlace();
  c.C = as_matrix(require(plant, "C", "plant."), "plant.C");

  const json& w = require(j, "weights", "");
  if (c.C.rows() == 0 || c.B.cols() == 0) throw ConfigError("plant", "empty B or C");
  c.Qy = as_square(require(w, "Qy", "weights."), c.C.rows(), "weights.Qy");
  c.R = as_square(require(w, "R", "weights."), c.B.cols(), "weights.R");
  const Eigen::Index nz = c.nz();
  if (w.contains("Q_eps") && !w["Q_eps"].is_null()) c.Q_eps = as_square(w["Q_eps"], nz, "weights.Q_eps");

  const json& poles = require(j, "observer_poles", "");
  if (!poles.is_array()) throw ConfigError("observer_poles", "expected an array");
  for (const json& z : poles) {
    if (z.is_number()) {
      c.observer_poles.emplace_back(z.get<double>(), 0.0);
    } else if (z.is_array() && z.size() == 2) {
      c.observer_poles.emplace_back(as_number(z[0], "observer_poles"), as_number(z[1], "observer_poles"));
    } else {
      throw ConfigError("observer_poles", "each pole is a number or [re, im]");
    }
  }
  if (j.contains("A_eps") && !j["A_eps"].is_null()) c.A_eps = as_matrix(j["A_eps"], "A_eps");
  c.eta0 = as_vector(require(j, "eta0", ""), "eta0");
  c.x0 = as_vector(require(j, "x0", ""), "x0");

  if (j.contains("noise")) {
    const json& nj = j["noise"];
    if (!nj.is_object()) throw ConfigError("noise", "expected an object");
    if (nj.contains("num_sinusoids")) {
      if (!nj["num_sinusoids"].is_number_integer()) throw ConfigError("noise.num_sinusoids", "expected an integer");
      c.noise.num_sinusoids = nj["num_sinusoids"].get<int>();
    }
    if (nj.contains("amp_range")) c.noise.amp_range = as_range(nj["amp_range"], "noise.amp_range");
    if (nj.contains("freq_range")) c.noise.freq_range = as_range(nj["freq_range"], "noise.freq_range");
    if (nj.contains("phase_range")) c.noise.phase_range = as_range(nj["phase_range"], "noise.phase_range");
  }
  c.algorithm = parse_algorithm(j.value("algorithm", std::string("vi")));
  if (j.contains("P0") && !j["P0"].is_null()) c.P0 = as_square(j["P0"], nz, "P0");
  if (j.contains("K0") && !j["K0"].is_null()) c.K0 = as_matrix(j["K0"], "K0");
  if (j.contains("eps_stop")) c.eps_stop = as_number(j["eps_stop"], "eps_stop");
  if (j.contains("caps")) {
    const json& caps = j["caps"];
    if (caps.contains("max_steps")) c.max_steps = static_cast<long>(as_number(caps["max_steps"], "caps.max_steps"));
    if (caps.contains("max_iters")) c.max_iters = static_cast<long>(as_number(caps["max_iters"], "caps.max_iters"));
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.noise.seed = c.seed;
  if (j.contains("horizon")) c.horizon = static_cast<long>(as_number(j["horizon"], "horizon"));
  if (j.contains("bilinear_form")) {
    const std::string f = j["bilinear_form"].get<std::string>();
    if (f == "plain") c.bilinear_form = BilinearForm::plain;
    else if (f == "r_weighted") c.bilinear_form = BilinearForm::r_weighted;
    else throw ConfigError("bilinear_form", "expected plain|r_weighted");
  }
  if (j.contains("stop_norm")) {
    const std::string f = j["stop_norm"].get<std::string>();
    if (f == "spectral") c.stop_norm = StopNorm::spectral;
    else if (f == "frobenius") c.stop_norm = StopNorm::frobenius;
    else throw ConfigError("stop_norm", "expected spectral|frobenius");
  }
  if (j.contains("tol_rank")) c.tol_rank = as_number(j["tol_rank"], "tol_rank");
  if (j.contains("tol_stab")) c.tol_stab = as_number(j["tol_stab"], "tol_stab");
  validate(c);
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline json to_json(const ExperimentConfig& c) {
  using namespace detail;
  json j;
  j["name"] = c.name;
  j["plant"] = {{"A", matrix_json(c.A)}, {"B", matrix_json(c.B)}, {"C", matrix_json(c.C)}};
  j["weights"] = {{"Qy", matrix_json(c.Qy)}, {"R", matrix_json(c.R)}};
  if (c.Q_eps) j["weights"]["Q_eps"] = matrix_json(*c.Q_eps);
  json poles = json::array();
  for (const Complex& z : c.observer_poles) {
    if (z.imag() == 0.0) poles.push_back(z.real());
    else poles.push_back({z.real(), z.imag()});
  }
  j["observer_poles"] = poles;
  if (c.A_eps) j["A_eps"] = matrix_json(*c.A_eps);
  j["eta0"] = vector_json(c.eta0);
  j["x0"] = vector_json(c.x0);
  j["noise"] = {{"num_sinusoids", c.noise.num_sinusoids},
                {"amp_range", {c.noise.amp_range.first, c.noise.amp_range.second}},
                {"freq_range", {c.noise.freq_range.first, c.noise.freq_range.second}},
                {"phase_range", {c.noise.phase_range.first, c.noise.phase_range.second}}};
  j["algorithm"] = to_string(c.algorithm);
  if (c.P0) j["P0"] = matrix_json(*c.P0);
  if (c.K0) j["K0"] = matrix_json(*c.K0);
  j["eps_stop"] = c.eps_stop;
  j["caps"] = {{"max_steps", c.max_steps}, {"max_iters", c.max_iters}};
  j["seed"] = c.seed;
  j["horizon"] = c.horizon;
  j["bilinear_form"] = c.bilinear_form == BilinearForm::plain ? "plain" : "r_weighted";
  j["stop_norm"] = c.stop_norm == StopNorm::spectral ? "spectral" : "frobenius";
  j["tol_rank"] = c.tol_rank;
  j["tol_stab"] = c.tol_stab;
  return j;
}

namespace detail {

inline bool flat_array(const json& j) {
  if (!j.is_array()) return false;
  for (const json& e : j)
    if (e.is_structured()) return false;
  return true;
}

// Like dump(2), but numeric rows stay on one line.
inline void write_compact(std::ostream& os, const json& j, int indent) {
  const std::string pad(indent, ' '), inner(indent + 2, ' ');
  if (flat_array(j)) {
    os << j.dump();
  } else if (j.is_array()) {
    os << "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      os << inner;
      write_compact(os, j[i], indent + 2);
      os << (i + 1 < j.size() ? ",\n" : "\n");
    }
    os << pad << ']';
  } else if (j.is_object() && !j.empty()) {
    os << "{\n";
    std::size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) {
      os << inner << json(it.key()).dump() << ": ";
      write_compact(os, it.value(), indent + 2);
      os << (i + 1 < j.size() ? ",\n" : "\n");
    }
    os << pad << '}';
  } else {
    os << j.dump();
  }
}

}  // namespace detail

inline std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  detail::write_compact(os, to_json(c), 0);
  os << '\n';
  return os.str();
}

inline bool same_matrix(const std::optional<Matrix>& a, const std::optional<Matrix>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || (a->rows() == b->rows() && a->cols() == b->cols() && *a == *b);
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto eq = [](const Matrix& x, const Matrix& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  return a.name == b.name && eq(a.A, b.A) && eq(a.B, b.B) && eq(a.C, b.C) && eq(a.Qy, b.Qy) &&
         eq(a.R, b.R) && same_matrix(a.Q_eps, b.Q_eps) && a.observer_poles == b.observer_poles &&
         same_matrix(a.A_eps, b.A_eps) && eq(a.eta0, b.eta0) && eq(a.x0, b.x0) &&
         a.noise.num_sinusoids == b.noise.num_sinusoids && a.noise.amp_range == b.noise.amp_range &&
         a.noise.freq_range == b.noise.freq_range && a.noise.phase_range == b.noise.phase_range &&
         a.noise.seed == b.noise.seed && a.algorithm == b.algorithm && same_matrix(a.P0, b.P0) &&
         same_matrix(a.K0, b.K0) && a.eps_stop == b.eps_stop && a.max_steps == b.max_steps &&
         a.max_iters == b.max_iters && a.seed == b.seed && a.horizon == b.horizon &&
         a.bilinear_form == b.bilinear_form && a.stop_norm == b.stop_norm &&
         a.tol_rank == b.tol_rank && a.tol_stab == b.tol_stab;
}

}  // namespace ofb::harness
