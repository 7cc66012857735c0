#pragma once

#include <optional>

#include "ofb/error.hpp"
#include "ofb/lti.hpp"
#include "ofb/matops.hpp"

namespace ofb {

enum class StopNorm { spectral, frobenius };

inline double stop_norm(const Matrix& X, StopNorm kind) {
  if (kind == StopNorm::frobenius) return X.norm();
  if (X.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(X).singularValues()(0);
}

struct AreSolution {
  Matrix P;
  Matrix K;
  long iterations = 0;
  double residual = 0.0;
};

struct AreOptions {
  long max_iters = 100000;
  StopNorm norm = StopNorm::spectral;
};

inline Matrix optimal_gain(const LtiSystem& sys, const Matrix& P) {
  const Matrix& B = sys.B();
  return (sys.R() + B.transpose() * P * B).ldlt().solve(B.transpose() * P * sys.A());
}

inline double are_residual(const LtiSystem& sys, const Matrix& P) {
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  const Matrix G = B.transpose() * P * A;
  const Matrix res = A.transpose() * P * A - P + sys.Qx() -
                     G.transpose() * (sys.R() + B.transpose() * P * B).ldlt().solve(G);
  return stop_norm(res, StopNorm::spectral);
}

// Solves F' P F - P + Q = 0 through (F' kron F' - I) vec(P) = -vec(Q).
inline Matrix dlyap(const Matrix& F, const Matrix& Qrhs) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n || Qrhs.rows() != n || Qrhs.cols() != n)
    throw DimensionError("dlyap: dimension mismatch");
  if (!is_schur(F)) throw InstabilityError("dlyap: spectral radius of F is not below 1");
  const Matrix Ft = F.transpose();
  Matrix op = kron(Ft, Ft) - Matrix::Identity(n * n, n * n);
  const Vector p = op.partialPivLu().solve(Vector(-vec(Qrhs)));
  return sym(unvec(p, n, n));
}

inline AreSolution are_vi(const LtiSystem& sys, std::optional<Matrix> P0, double eps,
                          const AreOptions& opt = {}) {
  if (!(eps > 0)) throw DimensionError("are_vi: eps must be positive");
  const Eigen::Index n = sys.n();
  Matrix P = P0 ? *P0 : Matrix::Zero(n, n);
  if (P.rows() != n || P.cols() != n) throw DimensionError("are_vi: P0 must be n x n");
  require_symmetric(P, kDefaultSymTol, "P0");
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  const Matrix Qx = sys.Qx();
  for (long j = 0; j < opt.max_iters; ++j) {
    const Matrix G = B.transpose() * P * A;
    const Matrix next = sym(A.transpose() * P * A + Qx -
                            G.transpose() * (sys.R() + B.transpose() * P * B).ldlt().solve(G));
    const double d = stop_norm(next - P, opt.norm);
    P = next;
    if (d < eps) {
      AreSolution s;
      s.P = P;
      s.K = optimal_gain(sys, P);
      s.iterations = j + 1;
      s.residual = are_residual(sys, P);
      return s;
    }
  }
  throw NonConvergenceError("are_vi: iteration cap reached", opt.max_iters);
}

inline AreSolution are_pi(const LtiSystem& sys, const Matrix& K0, double eps,
                          const AreOptions& opt = {}) {
  if (!(eps > 0)) throw DimensionError("are_pi: eps must be positive");
  if (K0.rows() != sys.m() || K0.cols() != sys.n()) throw DimensionError("are_pi: K0 must be m x n");
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  const Matrix Qx = sys.Qx();
  Matrix K = K0;
  Matrix Pprev;
  for (long j = 0; j < opt.max_iters; ++j) {
    const Matrix F = A - B * K;
    if (!is_schur(F)) {
      throw InadmissiblePolicyError("are_pi: policy at iteration " + std::to_string(j) +
                                    " is not stabilizing");
    }
    const Matrix P = dlyap(F, Qx + K.transpose() * sys.R() * K);
    K = optimal_gain(sys, P);
    if (j >= 1 && stop_norm(P - Pprev, opt.norm) < eps) {
      AreSolution s;
      s.P = P;
      s.K = K;
      s.iterations = j + 1;
      s.residual = are_residual(sys, P);
      return s;
    }
    Pprev = P;
  }
  throw NonConvergenceError("are_pi: iteration cap reached", opt.max_iters);
}

// Tight model-based reference used by every oracle in the suite.
// Tolerances scale with the value so large-norm problems still terminate.
inline AreSolution are_reference(const LtiSystem& sys) {
  AreSolution vi = are_vi(sys, std::nullopt, 1e-10 * std::max(1.0, sys.Qx().norm()));
  const double scale = std::max(1.0, vi.P.norm());
  for (double rel : {1e-13, 1e-11}) {
    try {
      return are_pi(sys, vi.K, rel * scale);
    } catch (const InadmissiblePolicyError&) {
      return vi;
    } catch (const NonConvergenceError&) {
    }
  }
  return vi;
}

struct ValueComparison {
  double V_state = 0.0;
  double V_observer = 0.0;
  Matrix P11;
  Matrix P22;
};

// Cost-to-go of u = -Kx versus u = -K(x - eps) with eps decaying through A - LC.
inline ValueComparison compare_value_functions(const LtiSystem& sys, const Matrix& L,
                                               const Vector& x0, const Vector& eps0,
                                               const Matrix& K) {
  const Matrix AL = sys.A() - L * sys.C();
  if (!is_schur(AL)) throw InstabilityError("A - LC is not Schur");
  const Matrix& B = sys.B();
  ValueComparison out;
  out.P11 = dlyap(sys.A() - B * K, sys.Qx() + K.transpose() * sys.R() * K);
  out.P22 = dlyap(AL, K.transpose() * (sys.R() + B.transpose() * out.P11 * B) * K);
  out.V_state = x0.dot(out.P11 * x0);
  out.V_observer = out.V_state + eps0.dot(out.P22 * eps0);
  return out;
}

inline ValueComparison compare_value_functions(const LtiSystem& sys, const Matrix& L,
                                               const Vector& x0, const Vector& eps0) {
  return compare_value_functions(sys, L, x0, eps0, are_reference(sys).K);
}

}  // namespace ofb
