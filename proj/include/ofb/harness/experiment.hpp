#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ofb/adp.hpp"
#include "ofb/harness/config.hpp"
#include "ofb/internal_model.hpp"
#include "ofb/lti.hpp"
#include "ofb/riccati.hpp"

namespace ofb::harness {

// Everything the model-based side knows; used for error reporting only.
struct GroundTruth {
  Matrix L;
  Matrix M;
  Matrix P_star;      // plant-state Riccati solution
  Matrix K_star;      // plant-state optimal gain
  Matrix model_gain;  // K* M
  Matrix P_star_eta;  // M' P* M
  double P_star_norm = 0.0;
};

struct ExperimentResult {
  ExperimentConfig cfg;
  GroundTruth truth;
  long kN = 0;
  std::vector<long> rank_profile;
  LearnerState learner;
  bool converged = false;
  std::string failure;
  std::vector<Vector> states, inputs, outputs;
  std::vector<Vector> observer_error;

  long iterations() const { return learner.iteration; }
  std::optional<double> gain_err_inf() const {
    if (learner.Kj.size() == 0 || truth.model_gain.size() != learner.Kj.size()) return std::nullopt;
    return (learner.Kj - truth.model_gain).cwiseAbs().maxCoeff();
  }
};

struct Setup {
  LtiSystem sys;
  InternalModel model;
  GroundTruth truth;
};

inline Setup build_setup(const ExperimentConfig& cfg) {
  validate(cfg);
  LtiSystem sys(cfg.A, cfg.B, cfg.C, cfg.Qy, cfg.R);
  GroundTruth t;
  t.L = place_observer_poles(sys, cfg.observer_poles);
  InternalModel model(sys.m(), sys.p(), CharPoly::from_roots(cfg.observer_poles), cfg.A_eps, cfg.eta0);
  t.M = build_parameterization(sys, t.L, model, cfg.x0).M;
  const AreSolution ref = are_reference(sys);
  t.P_star = ref.P;
  t.K_star = ref.K;
  t.model_gain = ref.K * t.M;
  t.P_star_eta = t.M.transpose() * ref.P * t.M;
  t.P_star_norm = stop_norm(t.P_star_eta, StopNorm::spectral);
  return {std::move(sys), std::move(model), std::move(t)};
}

inline LearnOptions learn_options(const ExperimentConfig& cfg, const GroundTruth& t) {
  LearnOptions lo;
  lo.eps = cfg.eps_stop;
  lo.max_iters = cfg.max_iters;
  lo.norm = cfg.stop_norm;
  lo.K_ref = t.model_gain;
  lo.n = cfg.n();
  lo.stab.tol_stab = cfg.tol_stab;
  return lo;
}

inline CollectOptions collect_options(const ExperimentConfig& cfg) {
  CollectOptions co;
  co.max_steps = cfg.max_steps;
  co.Qy = cfg.Qy;
  co.R = cfg.R;
  co.Qeps = cfg.Q_eps ? *cfg.Q_eps : Matrix();
  co.form = cfg.bilinear_form;
  co.tol_rank = cfg.tol_rank;
  return co;
}

inline LearnerState learn(const ExperimentConfig& cfg, const RegressorBatch& batch,
                          const LearnOptions& lo) {
  switch (cfg.algorithm) {
    case Algorithm::vi: return run_vi(batch, *cfg.P0, lo);
    case Algorithm::pi: return run_pi(batch, *cfg.K0, lo);
    case Algorithm::si: return run_si(batch, *cfg.P0, cfg.n(), lo);
  }
  throw ConfigError("algorithm", "unknown");
}

// Luenberger error x - xhat along a recorded run, xhat(0) = 0.
inline std::vector<Vector> observer_error_trace(const LtiSystem& sys, const Matrix& L,
                                                const std::vector<Vector>& xs,
                                                const std::vector<Vector>& us,
                                                const std::vector<Vector>& ys) {
  std::vector<Vector> out;
  out.reserve(xs.size());
  Vector xhat = Vector::Zero(sys.n());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    out.push_back(xs[k] - xhat);
    xhat = luenberger_step(sys, L, xhat, us[k], ys[k]);
  }
  return out;
}

// Collect, learn, then close the loop with u = -K eta from k_N to the horizon.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  Setup s = build_setup(cfg);
  ExperimentResult r;
  r.cfg = cfg;
  r.truth = s.truth;

  SimulatedPlant plant(s.sys, cfg.x0);
  const ExplorationNoise noise(cfg.noise, s.sys.m());
  CollectRecord rec;
  const RegressorBatch batch =
      collect(plant, s.model, cfg.behavior_gain(), noise, collect_options(cfg), &rec);
  r.kN = batch.size();
  r.rank_profile = rec.rank_profile;
  r.states = std::move(rec.states);
  r.inputs = std::move(rec.inputs);
  r.outputs = std::move(rec.outputs);

  try {
    r.learner = learn(cfg, batch, learn_options(cfg, s.truth));
    r.converged = r.learner.converged;
  } catch (const LearningNonConvergence& e) {
    r.learner = e.state();
    r.converged = false;
    r.failure = e.what();
  }

  if (r.converged) {
    const Matrix& K = r.learner.Kj;
    for (long k = r.kN; k < cfg.horizon; ++k) {
      const Vector y = plant.output();
      const Vector u = -K * s.model.eta();
      r.states.push_back(plant.ground_truth_state());
      r.inputs.push_back(u);
      r.outputs.push_back(y);
      plant.apply(u);
      s.model.step(u, y);
    }
  }
  r.observer_error = observer_error_trace(s.sys, s.truth.L, r.states, r.inputs, r.outputs);
  return r;
}

enum class GainSource { learned, model };

struct LoopRecord {
  std::vector<Vector> states, inputs, outputs;
  double cost_total = 0.0;
  double cost_post = 0.0;
  double peak_output_post = 0.0;
  double peak_input_post = 0.0;
};

struct ComparisonResult {
  ExperimentConfig cfg;
  GroundTruth truth;
  GainSource source = GainSource::learned;
  long kN = 0;
  bool learned_converged = false;
  Matrix gain;  // gain used by the internal-model controller
  LoopRecord proposed;
  LoopRecord baseline;
  std::vector<Vector> observer_error;
  bool prop1_ordering = false;
};

namespace detail {

inline void finish_costs(LoopRecord& lr, const Matrix& Qy, const Matrix& R, long kN) {
  for (std::size_t k = 0; k < lr.inputs.size(); ++k) {
    const double c = lr.outputs[k].dot(Qy * lr.outputs[k]) + lr.inputs[k].dot(R * lr.inputs[k]);
    lr.cost_total += c;
    if (static_cast<long>(k) >= kN) {
      lr.cost_post += c;
      lr.peak_output_post = std::max(lr.peak_output_post, lr.outputs[k].cwiseAbs().maxCoeff());
      lr.peak_input_post = std::max(lr.peak_input_post, lr.inputs[k].cwiseAbs().maxCoeff());
    }
  }
}

}  // namespace detail

// Internal-model controller u = -K eta against the observer-based u = -K* xhat.
// Both loops share x0 and the exploration input applied before k_N.
inline ComparisonResult compare_controllers(const ExperimentConfig& cfg,
                                            GainSource source = GainSource::learned) {
  ComparisonResult out;
  out.cfg = cfg;
  out.source = source;
  ExperimentResult run = run_experiment(cfg);
  out.truth = run.truth;
  out.kN = run.kN;
  out.learned_converged = run.converged;
  if (source == GainSource::learned && !run.converged)
    throw LearningNonConvergence("compare: learning did not converge", run.learner);
  out.gain = source == GainSource::learned ? run.learner.Kj : run.truth.model_gain;

  Setup s = build_setup(cfg);
  const long H = cfg.horizon;
  const std::vector<Vector> explore(run.inputs.begin(), run.inputs.begin() + run.kN);

  {
    SimulatedPlant plant(s.sys, cfg.x0);
    for (long k = 0; k < std::max(H, run.kN); ++k) {
      const Vector y = plant.output();
      const Vector u = k < run.kN ? explore[k] : Vector(-out.gain * s.model.eta());
      out.proposed.states.push_back(plant.ground_truth_state());
      out.proposed.inputs.push_back(u);
      out.proposed.outputs.push_back(y);
      plant.apply(u);
      s.model.step(u, y);
    }
  }
  {
    SimulatedPlant plant(s.sys, cfg.x0);
    Vector xhat = Vector::Zero(s.sys.n());
    for (long k = 0; k < std::max(H, run.kN); ++k) {
      const Vector y = plant.output();
      const Vector u = k < run.kN ? explore[k] : Vector(-s.truth.K_star * xhat);
      out.baseline.states.push_back(plant.ground_truth_state());
      out.baseline.inputs.push_back(u);
      out.baseline.outputs.push_back(y);
      out.observer_error.push_back(plant.ground_truth_state() - xhat);
      xhat = luenberger_step(s.sys, s.truth.L, xhat, u, y);
      plant.apply(u);
    }
  }
  detail::finish_costs(out.proposed, cfg.Qy, cfg.R, run.kN);
  detail::finish_costs(out.baseline, cfg.Qy, cfg.R, run.kN);
  const double slack = 1e-9 * std::max(1.0, out.proposed.cost_post);
  out.prop1_ordering = out.baseline.cost_post + slack >= out.proposed.cost_post;
  return out;
}

}  // namespace ofb::harness
