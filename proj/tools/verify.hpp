#pragma once

#include <iomanip>
#include <ostream>
#include <string>

#include "ofb/harness.hpp"
#include "ofb/harness/oracle.hpp"

namespace ofb::tools {

// Learning-equation unknowns recovered from data against their model-based
// definitions, on both bundled systems. The second system's regressor is far
// worse conditioned, so it is held to a looser bound.
inline bool run_verify(std::ostream& os, double tol_sim1 = 1e-6, double tol_sim2 = 1e-3) {
  using namespace ofb::harness;
  bool all = true;
  double tol = tol_sim1;
  auto report = [&](const std::string& what, double err) {
    const bool ok = err <= tol;
    all = all && ok;
    os << (ok ? "PASS " : "FAIL ") << std::left << std::setw(44) << what << " rel_err=" << std::scientific
       << std::setprecision(3) << err << std::defaultfloat << '\n';
  };

  for (const char* name : {"sim1", "sim2"}) {
    const ExperimentConfig cfg = bundled_config(name, Algorithm::vi);
    const PreparedBatch pb = prepare_batch(cfg);
    const LtiSystem& sys = pb.setup.sys;
    const Matrix& M = pb.setup.truth.M;
    const std::string tag = std::string(name) + ": ";
    tol = std::string(name) == "sim1" ? tol_sim1 : tol_sim2;
    os << name << ": k_N=" << pb.batch.size() << " cond(Pi)=" << std::scientific << std::setprecision(2)
       << pb.batch.condition() << std::defaultfloat << " tol=" << tol << '\n';

    const Matrix P = pb.setup.truth.P_star;
    const ViStep vs = vi_step(pb.batch, M.transpose() * P * M);
    const Blocks vb = vi_blocks_model(sys, M, P);
    report(tag + "VI P_etaeta", rel_err(vs.Pee, vb.Pee));
    report(tag + "VI P_etau", rel_err(vs.Peu, vb.Peu));
    report(tag + "VI P_uu", rel_err(vs.Puu, vb.Puu));

    const Matrix K = pb.setup.truth.K_star;
    const PiBlocksModel pm = pi_blocks_model(sys, M, K);
    for (PiSolve how : {PiSolve::factored, PiSolve::literal}) {
      const std::string h = how == PiSolve::factored ? "PI(factored) " : "PI(literal) ";
      const PiStep ps = pi_step(pb.batch, K * M, PiStepOptions{how});
      report(tag + h + "P", rel_err(ps.P, pm.P_eta));
      report(tag + h + "P_AB", rel_err(ps.PAB, pm.PAB));
      report(tag + h + "P_BB", rel_err(ps.PBB, pm.PBB));
    }

    Matrix Px = Matrix::Identity(sys.n(), sys.n());
    Matrix Pe = M.transpose() * Px * M;
    double worst = 0.0;
    for (int j = 0; j < 10; ++j) {
      Pe = vi_step(pb.batch, Pe).P_next;
      Px = vi_model_step(sys, Px);
      worst = std::max(worst, rel_err(Pe, M.transpose() * Px * M));
    }
    report(tag + "VI sequence vs model-based (10 iterations)", worst);
  }
  return all;
}

}  // namespace ofb::tools
