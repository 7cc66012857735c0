#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "json.hpp"
#include "ofb/harness/config.hpp"
#include "ofb/harness/experiment.hpp"

namespace ofb::harness {

namespace fs = std::filesystem;

struct OutputOptions {
  bool with_timing = false;
};

namespace detail {

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write '" + p.string() + "'");
  os << std::setprecision(12);
  return os;
}

inline void header(std::ostream& os, const char* prefix, Eigen::Index count) {
  for (Eigen::Index i = 1; i <= count; ++i) os << ',' << prefix << i;
}

inline void cells(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << v(i);
}

inline json flat_json(const Matrix& M) {
  json out = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c) out.push_back(M(r, c));
  return out;
}

inline void write_series(const fs::path& p, const std::vector<Vector>& xs,
                         const std::vector<Vector>& us, const std::vector<Vector>& ys) {
  auto os = open_out(p);
  const Eigen::Index n = xs.empty() ? 0 : xs[0].size();
  const Eigen::Index m = us.empty() ? 0 : us[0].size();
  const Eigen::Index pp = ys.empty() ? 0 : ys[0].size();
  os << 'k';
  header(os, "x_", n);
  header(os, "u_", m);
  header(os, "y_", pp);
  os << '\n';
  for (std::size_t k = 0; k < xs.size(); ++k) {
    os << k;
    cells(os, xs[k]);
    cells(os, us[k]);
    cells(os, ys[k]);
    os << '\n';
  }
}

}  // namespace detail

inline json summary_json(const ExperimentResult& r) {
  using detail::flat_json;
  json j;
  j["name"] = r.cfg.name;
  j["algorithm"] = to_string(r.cfg.algorithm);
  j["seed"] = r.cfg.seed;
  j["kN"] = r.kN;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations();
  j["P_star_norm"] = r.truth.P_star_norm;
  j["final_gain"] = flat_json(r.learner.Kj);
  j["model_gain"] = flat_json(r.truth.model_gain);
  const auto err = r.gain_err_inf();
  j["gain_err_inf"] = err ? json(*err) : json(nullptr);
  j["P_learned_norm"] = r.learner.Pj.size() ? json(stop_norm(r.learner.Pj, StopNorm::spectral)) : json(nullptr);
  j["switch_iteration"] =
      r.learner.history.switch_iteration ? json(*r.learner.history.switch_iteration) : json(nullptr);
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

// trajectory.csv, observer_error.csv, trace.csv, summary.json and plot_*.csv.
inline void emit_outputs(const ExperimentResult& r, const fs::path& dir,
                         const OutputOptions& opt = {}) {
  fs::create_directories(dir);
  detail::write_series(dir / "trajectory.csv", r.states, r.inputs, r.outputs);
  {
    auto os = detail::open_out(dir / "observer_error.csv");
    os << 'k';
    detail::header(os, "e_", r.observer_error.empty() ? 0 : r.observer_error[0].size());
    os << '\n';
    for (std::size_t k = 0; k < r.observer_error.size(); ++k) {
      os << k;
      detail::cells(os, r.observer_error[k]);
      os << '\n';
    }
  }
  {
    auto os = detail::open_out(dir / "trace.csv");
    r.learner.history.write_csv(os, opt.with_timing);
  }
  {
    auto os = detail::open_out(dir / "plot_convergence.csv");
    os << "iteration,gain_err,dP_norm\n";
    for (const auto& rec : r.learner.history.records) {
      os << rec.iteration << ',';
      if (rec.gain_err) os << *rec.gain_err;
      os << ',' << rec.dP_norm << '\n';
    }
  }
  {
    auto os = detail::open_out(dir / "plot_io.csv");
    os << "k,phase";
    detail::header(os, "u_", r.inputs.empty() ? 0 : r.inputs[0].size());
    detail::header(os, "y_", r.outputs.empty() ? 0 : r.outputs[0].size());
    os << '\n';
    for (std::size_t k = 0; k < r.inputs.size(); ++k) {
      os << k << ',' << (static_cast<long>(k) < r.kN ? "explore" : "control");
      detail::cells(os, r.inputs[k]);
      detail::cells(os, r.outputs[k]);
      os << '\n';
    }
  }
  auto os = detail::open_out(dir / "summary.json");
  os << summary_json(r).dump(2) << '\n';
}

inline json comparison_json(const ComparisonResult& c) {
  auto loop = [](const LoopRecord& l) {
    return json{{"cost_total", l.cost_total},
                {"cost_post", l.cost_post},
                {"peak_output_post", l.peak_output_post},
                {"peak_input_post", l.peak_input_post}};
  };
  json j;
  j["name"] = c.cfg.name;
  j["seed"] = c.cfg.seed;
  j["gain_source"] = c.source == GainSource::learned ? "learned" : "model";
  j["kN"] = c.kN;
  j["gain"] = detail::flat_json(c.gain);
  j["proposed"] = loop(c.proposed);
  j["baseline"] = loop(c.baseline);
  j["prop1_ordering"] = c.prop1_ordering;
  return j;
}

inline void emit_comparison(const ComparisonResult& c, const fs::path& dir) {
  fs::create_directories(dir);
  detail::write_series(dir / "proposed.csv", c.proposed.states, c.proposed.inputs, c.proposed.outputs);
  detail::write_series(dir / "baseline.csv", c.baseline.states, c.baseline.inputs, c.baseline.outputs);
  {
    auto os = detail::open_out(dir / "plot_compare.csv");
    const Eigen::Index m = c.proposed.inputs.empty() ? 0 : c.proposed.inputs[0].size();
    const Eigen::Index p = c.proposed.outputs.empty() ? 0 : c.proposed.outputs[0].size();
    const Eigen::Index n = c.observer_error.empty() ? 0 : c.observer_error[0].size();
    os << 'k';
    detail::header(os, "u_", m);
    detail::header(os, "uhat_", m);
    detail::header(os, "y_", p);
    detail::header(os, "yhat_", p);
    detail::header(os, "e_", n);
    os << '\n';
    for (std::size_t k = 0; k < c.proposed.inputs.size(); ++k) {
      os << k;
      detail::cells(os, c.proposed.inputs[k]);
      detail::cells(os, c.baseline.inputs[k]);
      detail::cells(os, c.proposed.outputs[k]);
      detail::cells(os, c.baseline.outputs[k]);
      detail::cells(os, c.observer_error[k]);
      os << '\n';
    }
  }
  auto os = detail::open_out(dir / "comparison.json");
  os << comparison_json(c).dump(2) << '\n';
}

}  // namespace ofb::harness
