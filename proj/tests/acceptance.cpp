// Acceptance suite: one PASS/FAIL line per numbered criterion.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ofb/harness.hpp"
#include "ofb/harness/oracle.hpp"
#include "reference_values.hpp"
#include "test_support.hpp"

namespace {

using namespace ofb;
using namespace ofb::harness;
namespace ref = ofb::reference;

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Setup setup_for(const ExperimentConfig& cfg) { return build_setup(cfg); }

double max_rel_component(const Matrix& got, const Matrix& want) {
  return ((got - want).array().abs() / want.array().abs()).maxCoeff();
}

Outcome c1() {
  const Setup s = setup_for(sim1_config());
  const Matrix M = ref::sim1_M_printed();
  const Matrix K = s.truth.K_star * M;
  const double gerr = (K - ref::sim1_K_star_printed()).cwiseAbs().maxCoeff();
  const double pn = stop_norm(M.transpose() * s.truth.P_star * M, StopNorm::spectral);
  const double perr = std::abs(pn - ref::kSim1PStarNorm);
  return {gerr <= 1e-3 && perr <= 1e-3,
          "gain err " + fmt("%.2e", gerr) + ", |P*| = " + fmt("%.5f", pn)};
}

// The printed parameterization has 4 decimals, too coarse for entries of order
// 1e-4, so the gain is composed with the constructed M; the printed-M figure is
// reported alongside.
Outcome c2() {
  const Setup s = setup_for(sim2_config());
  const Matrix K = s.truth.K_star * s.truth.M;
  const double grel = max_rel_component(K, ref::sim2_K_star_printed());
  const double prel = std::abs(s.truth.P_star_norm / ref::kSim2PStarNorm - 1.0);
  const double grel_printed =
      max_rel_component(s.truth.K_star * ref::sim2_M_printed(), ref::sim2_K_star_printed());
  return {grel <= 2e-3 && prel <= 1e-3,
          "gain rel err " + fmt("%.2e", grel) + ", |P*| rel err " + fmt("%.2e", prel) +
              " (printed M: " + fmt("%.2e", grel_printed) + ")"};
}

// Relative agreement per entry, allowing the printed rounding half-unit.
Outcome c3() {
  const Matrix M1 = setup_for(sim1_config()).truth.M;
  const double e1 = (M1 - ref::sim1_M_printed()).cwiseAbs().maxCoeff();
  const Matrix M2 = setup_for(sim2_config()).truth.M;
  const Matrix P2 = ref::sim2_M_printed();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < P2.size(); ++i) {
    const double bound = std::max(1e-3 * std::abs(P2(i)), ref::kPrintedHalfUlp);
    worst = std::max(worst, std::abs(M2(i) - P2(i)) / bound);
  }
  return {e1 <= 1e-3 && worst <= 1.0,
          "first system max err " + fmt("%.2e", e1) + ", second system worst err/bound " + fmt("%.3f", worst)};
}

Outcome c4() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dn(1, 5), dmp(1, 2);
  double worst = 0.0;
  std::vector<double> rel;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = dn(rng), m = dmp(rng), p = dmp(rng);
    const LtiSystem sys = test::random_system(rng, n, m, p);
    const auto poles = test::random_poles(rng, n);
    const Matrix L = place_observer_poles(sys, poles);
    Vector eta0 = Vector::Zero(n * (m + p + 1));
    eta0.tail(n) = test::gaussian(rng, n, 1);
    InternalModel im(m, p, CharPoly::from_roots(poles), std::nullopt, eta0);
    const Vector x0 = test::gaussian(rng, n, 1);
    const Matrix M = build_parameterization(sys, L, im, x0).M;
    Vector x = x0;
    double err = 0.0, scale = 0.0;
    for (int k = 0; k < 200; ++k) {
      err = std::max(err, (x - M * im.eta()).norm());
      scale = std::max(scale, x.norm());
      const Vector u = test::gaussian(rng, m, 1);
      const Vector y = sys.C() * x;
      im.step(u, y);
      x = sys.A() * x + sys.B() * u;
    }
    worst = std::max(worst, err / scale);
    rel.push_back(err / scale);
  }
  // a double-valued L only matches the model polynomial to ~1e-13 in the
  // coefficients; badly conditioned draws amplify that past the bound
  const auto over = std::count_if(rel.begin(), rel.end(), [](double r) { return r > 1e-9; });
  std::nth_element(rel.begin(), rel.begin() + 50, rel.end());
  return {worst <= 1e-9, "worst relative reconstruction error " + fmt("%.2e", worst) + ", median " +
                             fmt("%.2e", rel[50]) + ", " + std::to_string(over) + " of 100 above 1e-9"};
}

struct SeedStats {
  long worst_iters = 0, min_kN = 1L << 30, max_kN = 0;
  double worst_err = 0.0, worst_ms = 0.0;
  bool all_converged = true, all_switched = true;
};

SeedStats sweep(Algorithm alg, bool sim2, bool relative) {
  SeedStats st;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ExperimentConfig cfg = sim2 ? sim2_config(alg) : sim1_config(alg);
    cfg.seed = cfg.noise.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentResult r = run_experiment(cfg);
    st.worst_ms = std::max(
        st.worst_ms, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    st.all_converged = st.all_converged && r.converged;
    st.all_switched = st.all_switched && r.learner.history.switch_iteration.has_value();
    st.worst_iters = std::max(st.worst_iters, r.iterations());
    st.min_kN = std::min(st.min_kN, r.kN);
    st.max_kN = std::max(st.max_kN, r.kN);
    double e = r.gain_err_inf().value_or(std::numeric_limits<double>::infinity());
    if (relative) e /= r.truth.model_gain.cwiseAbs().maxCoeff();
    st.worst_err = std::max(st.worst_err, e);
  }
  return st;
}

std::string describe(const SeedStats& s) {
  std::ostringstream os;
  os << "max iterations " << s.worst_iters << ", worst gain err " << fmt("%.2e", s.worst_err) << ", kN in ["
     << s.min_kN << ", " << s.max_kN << "], slowest seed " << fmt("%.0f", s.worst_ms) << " ms";
  return os.str();
}

Outcome c5() {
  const SeedStats s = sweep(Algorithm::vi, false, false);
  return {s.all_converged && s.worst_iters <= 300 && s.worst_err <= 1e-2 && s.min_kN >= 28 && s.max_kN <= 60 &&
              s.worst_ms < 10000,
          describe(s)};
}

Outcome c6() {
  const SeedStats s = sweep(Algorithm::pi, true, true);
  return {s.all_converged && s.worst_iters <= 15 && s.worst_err <= 1e-2 && s.worst_ms < 10000, describe(s)};
}

Outcome c7() {
  const SeedStats s = sweep(Algorithm::si, true, true);
  return {s.all_converged && s.all_switched && s.worst_iters <= 300 && s.worst_err <= 1e-2,
          describe(s) + (s.all_switched ? ", certificate fired on every seed" : ", certificate missing")};
}

Outcome c8() {
  const PreparedBatch pb = prepare_batch(sim1_config());
  const LtiSystem& sys = pb.setup.sys;
  const Matrix& M = pb.setup.truth.M;
  double worst = 0.0;
  std::mt19937_64 rng(8);
  for (int t = 0; t < 5; ++t) {
    const Matrix G = test::gaussian(rng, 2, 2);
    const Matrix P = G * G.transpose();
    const ViStep vs = vi_step(pb.batch, M.transpose() * P * M);
    const Blocks want = vi_blocks_model(sys, M, P);
    worst = std::max({worst, rel_err(vs.Pee, want.Pee), rel_err(vs.Peu, want.Peu), rel_err(vs.Puu, want.Puu)});
  }
  for (const Matrix& K : {Matrix(pb.setup.truth.K_star), Matrix((Matrix(1, 2) << 0.5, 0.5).finished())}) {
    const PiBlocksModel want = pi_blocks_model(sys, M, K);
    for (PiSolve how : {PiSolve::factored, PiSolve::literal}) {
      const PiStep ps = pi_step(pb.batch, K * M, PiStepOptions{how});
      worst = std::max({worst, rel_err(ps.P, want.P_eta), rel_err(ps.PAB, want.PAB), rel_err(ps.PBB, want.PBB)});
    }
  }
  // the learner's own P_j after j iterations against the model-based recursion
  Matrix Px = Matrix::Identity(2, 2);
  LearnOptions lo;
  lo.eps = 1e-300;
  for (long j = 1; j <= 10; ++j) {
    Px = vi_model_step(sys, Px);
    lo.max_iters = j;
    Matrix Pj;
    try {
      Pj = run_vi(pb.batch, M.transpose() * M, lo).Pj;
    } catch (const LearningNonConvergence& e) {
      Pj = e.state().Pj;
    }
    worst = std::max(worst, rel_err(Pj, M.transpose() * Px * M));
  }
  return {worst <= 1e-6, "worst block / sequence relative error " + fmt("%.2e", worst)};
}

Outcome c9() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dn(1, 4), dmp(1, 2);
  std::uniform_real_distribution<double> scale(0.0, 1.5);
  int certs = 0, false_certs = 0;
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = dn(rng), m = dmp(rng), p = dmp(rng);
    const LtiSystem sys = test::random_system(rng, n, m, p);
    const auto poles = test::random_poles(rng, n);
    const Matrix L = place_observer_poles(sys, poles);
    Vector eta0 = Vector::Zero(n * (m + p + 1));
    eta0.tail(n) = test::gaussian(rng, n, 1);
    const InternalModel im(m, p, CharPoly::from_roots(poles), std::nullopt, eta0);
    const Matrix M = build_parameterization(sys, L, im, test::gaussian(rng, n, 1)).M;
    const Matrix K = are_reference(sys).K + scale(rng) * test::gaussian(rng, m, n);
    const Matrix F = sys.A() - sys.B() * K;
    const Matrix G = test::gaussian(rng, n, n);
    Matrix P = G * G.transpose() + 1e-3 * Matrix::Identity(n, n);
    // half the pairs carry a value consistent with the policy, when it has one
    if (t % 2 == 0 && is_schur(F)) P = dlyap(F, sys.Qx() + K.transpose() * sys.R() * K + P);
    const Matrix& A = sys.A();
    const Matrix& B = sys.B();
    const StabilityResult r =
        stability_for_gain(M.transpose() * A.transpose() * P * A * M, M.transpose() * A.transpose() * P * B,
                           B.transpose() * P * B + sys.R(), M.transpose() * P * M, K * M, n, sys.R());
    if (r.is_stable_cert) {
      ++certs;
      if (!is_schur(F)) ++false_certs;
    }
  }
  return {false_certs == 0 && certs > 0,
          std::to_string(certs) + " certificates, " + std::to_string(false_certs) + " false"};
}

// Truncated closed-loop sum for u = -K xhat with xhat(0) = x0 - eps0.
double simulated_value(const LtiSystem& sys, const Matrix& K, const Matrix& L, const Vector& x0,
                       const Vector& eps0) {
  Vector x = x0, xhat = x0 - eps0;
  double J = 0.0;
  for (long k = 0; k < 200000; ++k) {
    const Vector u = -K * xhat;
    const Vector y = sys.C() * x;
    const double stage = y.dot(sys.Qy() * y) + u.dot(sys.R() * u);
    J += stage;
    if (k > 10 && x.squaredNorm() + xhat.squaredNorm() < 1e-12 * (x0.squaredNorm() + eps0.squaredNorm())) break;
    xhat = luenberger_step(sys, L, xhat, u, y);
    x = sys.A() * x + sys.B() * u;
  }
  return J;
}

Outcome c10() {
  double worst_gap = 0.0;
  int order_fail = 0, equality_fail = 0;
  auto check = [&](const LtiSystem& sys, const Matrix& L, const Vector& x0, const Vector& e0) {
    const Matrix K = are_reference(sys).K;
    const ValueComparison v = compare_value_functions(sys, L, x0, e0, K);
    if (!(v.V_observer > v.V_state)) ++order_fail;
    const ValueComparison z = compare_value_functions(sys, L, x0, Vector::Zero(x0.size()), K);
    if (z.V_observer != z.V_state) ++equality_fail;
    worst_gap = std::max(worst_gap, std::abs(simulated_value(sys, K, L, x0, e0) / v.V_observer - 1.0));
    worst_gap = std::max(worst_gap, std::abs(simulated_value(sys, K, L, x0, Vector::Zero(x0.size())) / v.V_state - 1.0));
  };
  {
    const ExperimentConfig cfg = sim1_config();
    const LtiSystem sys = test::system_of(cfg);
    check(sys, place_observer_poles(sys, cfg.observer_poles), cfg.x0, cfg.x0);
  }
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> dn(1, 4), dmp(1, 2);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index n = dn(rng);
    const LtiSystem sys = test::random_system(rng, n, dmp(rng), dmp(rng));
    check(sys, place_observer_poles(sys, test::random_poles(rng, n)), test::gaussian(rng, n, 1),
          test::gaussian(rng, n, 1));
  }
  return {order_fail == 0 && equality_fail == 0 && worst_gap <= 5e-3,
          "ordering failures " + std::to_string(order_fail) + ", equality failures " +
              std::to_string(equality_fail) + ", worst closed-form vs simulated gap " + fmt("%.2e", worst_gap)};
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> all{
      {1, "ground-truth gain and value norm, first example", 1, c1},
      {2, "ground-truth gain and value norm, second example", 1, c2},
      {3, "parameterization matrices reproduce the printed displays", 1, c3},
      {4, "x = M eta exactness on 100 random systems", 30, c4},
      {5, "model-free VI on the first example, 20 seeds", 200, c5},
      {6, "model-free PI on the second example, 20 seeds", 200, c6},
      {7, "model-free SI on the second example, 20 seeds", 200, c7},
      {8, "exact-data equivalence with the model-based recursions", 5, c8},
      {9, "stability certificate soundness on 200 random pairs", 30, c9},
      {10, "observer-based value exceeds state-feedback value", 30, c10},
  };
  int failed = 0;
  for (const Criterion& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = o.ok && secs < c.budget_s;
    if (!ok) ++failed;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " | " << o.detail << " | "
              << fmt("%.2f", secs) << " s (budget " << c.budget_s << " s)" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
