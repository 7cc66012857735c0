#pragma once

#include <vector>

#include "ofb/adp.hpp"
#include "ofb/harness/experiment.hpp"
#include "ofb/lti.hpp"
#include "ofb/riccati.hpp"

namespace ofb::harness {

// Blocks the VI learning equation must recover when the value is M' P M.
inline Blocks vi_blocks_model(const LtiSystem& sys, const Matrix& M, const Matrix& P) {
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  Blocks b;
  b.Pee = M.transpose() * (A.transpose() * P * A + sys.Qx()) * M;
  b.Peu = M.transpose() * A.transpose() * P * B;
  b.Puu = B.transpose() * P * B + sys.R();
  return b;
}

struct PiBlocksModel {
  Matrix P_eta;  // M' P M
  Matrix PAB;    // M' (A - BK)' P B
  Matrix PBB;    // B' P B
  Matrix P;      // plant-state Lyapunov solution
};

// Policy evaluation for the internal-model gain K M.
inline PiBlocksModel pi_blocks_model(const LtiSystem& sys, const Matrix& M, const Matrix& K) {
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  PiBlocksModel out;
  out.P = dlyap(A - B * K, sys.Qx() + K.transpose() * sys.R() * K);
  out.P_eta = M.transpose() * out.P * M;
  out.PAB = M.transpose() * (A - B * K).transpose() * out.P * B;
  out.PBB = B.transpose() * out.P * B;
  return out;
}

// One model-based VI step on the plant state, lifted through M.
inline Matrix vi_model_step(const LtiSystem& sys, const Matrix& P) {
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  const Matrix G = B.transpose() * P * A;
  return sym(A.transpose() * P * A + sys.Qx() -
             G.transpose() * (sys.R() + B.transpose() * P * B).ldlt().solve(G));
}

inline double rel_err(const Matrix& got, const Matrix& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(1.0, want.cwiseAbs().maxCoeff());
}

// Collection on a bundled or user configuration, keeping the setup alive.
struct PreparedBatch {
  Setup setup;
  RegressorBatch batch;
};

inline PreparedBatch prepare_batch(const ExperimentConfig& cfg) {
  Setup s = build_setup(cfg);
  SimulatedPlant plant(s.sys, cfg.x0);
  const ExplorationNoise noise(cfg.noise, s.sys.m());
  RegressorBatch b = collect(plant, s.model, cfg.behavior_gain(), noise, collect_options(cfg));
  return {std::move(s), std::move(b)};
}

}  // namespace ofb::harness
