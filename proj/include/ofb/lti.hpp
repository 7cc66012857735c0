#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "ofb/error.hpp"
#include "ofb/matops.hpp"

namespace ofb {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

inline double spectral_radius(const Matrix& F) {
  if (F.size() == 0) return 0.0;
  return Eigen::EigenSolver<Matrix>(F, false).eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_schur(const Matrix& F) { return spectral_radius(F) < 1.0; }

namespace detail {

inline Eigen::Index complex_rank(const CMatrix& X) {
  Eigen::JacobiSVD<CMatrix> svd(X);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s.size() == 0 || !(s(0) > 0)) return 0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-9 * std::max(1.0, s(0))) ++r;
  return r;
}

inline bool is_psd(const Matrix& Q, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
  return es.eigenvalues().minCoeff() >= -tol * std::max(1.0, Q.norm());
}

inline bool is_pd(const Matrix& Q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
  return es.eigenvalues().minCoeff() > 0;
}

}  // namespace detail

// PBH: rank [lambda I - A, B] = n for every eigenvalue with |lambda| >= 1.
inline bool is_stabilizable(const Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.rows();
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(A, false).eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) < 1.0 - 1e-12) continue;
    CMatrix X(n, n + B.cols());
    X << ev(i) * CMatrix::Identity(n, n) - A.cast<Complex>(), B.cast<Complex>();
    if (detail::complex_rank(X) < n) return false;
  }
  return true;
}

inline bool is_observable(const Matrix& A, const Matrix& C) {
  const Eigen::Index n = A.rows();
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(A, false).eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    CMatrix X(n + C.rows(), n);
    X << ev(i) * CMatrix::Identity(n, n) - A.cast<Complex>(), C.cast<Complex>();
    if (detail::complex_rank(X) < n) return false;
  }
  return true;
}

class LtiSystem {
 public:
  LtiSystem(Matrix A, Matrix B, Matrix C, Matrix Qy, Matrix R)
      : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), Qy_(std::move(Qy)),
        R_(std::move(R)) {
    const Eigen::Index n = A_.rows();
    if (A_.cols() != n || n == 0) throw DimensionError("A must be square and non-empty");
    if (B_.rows() != n || B_.cols() == 0) throw DimensionError("B must have n rows");
    if (C_.cols() != n || C_.rows() == 0) throw DimensionError("C must have n columns");
    if (Qy_.rows() != C_.rows() || Qy_.cols() != C_.rows())
      throw DimensionError("Qy must be p x p");
    if (R_.rows() != B_.cols() || R_.cols() != B_.cols())
      throw DimensionError("R must be m x m");
    require_symmetric(Qy_, kDefaultSymTol, "Qy");
    require_symmetric(R_, kDefaultSymTol, "R");
    if (!detail::is_psd(Qy_, 1e-12)) throw DimensionError("Qy must be positive semidefinite");
    if (!detail::is_pd(R_)) throw DimensionError("R must be positive definite");
    if (!is_stabilizable(A_, B_)) throw StabilizabilityError("(A, B) is not stabilizable");
    if (!is_observable(A_, C_)) throw ObservabilityError("(A, C) is not observable");
  }

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& C() const { return C_; }
  const Matrix& Qy() const { return Qy_; }
  const Matrix& R() const { return R_; }
  Matrix Qx() const { return C_.transpose() * Qy_ * C_; }

  Eigen::Index n() const { return A_.rows(); }
  Eigen::Index m() const { return B_.cols(); }
  Eigen::Index p() const { return C_.rows(); }

 private:
  Matrix A_, B_, C_, Qy_, R_;
};

struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;
  Vector final_state;

  std::size_t length() const { return inputs.size(); }
};

inline constexpr double kDivergenceGuard = 1e12;

// policy(k, y) -> u; any controller state lives in the callable.
template <class Policy>
Trajectory simulate(const LtiSystem& sys, const Vector& x0, Policy&& policy, long steps,
                    double guard = kDivergenceGuard) {
  if (steps < 1) throw DimensionError("simulate: steps must be >= 1");
  if (x0.size() != sys.n()) throw DimensionError("simulate: x0 has wrong length");
  Trajectory tr;
  tr.states.reserve(steps);
  tr.inputs.reserve(steps);
  tr.outputs.reserve(steps);
  Vector x = x0;
  for (long k = 0; k < steps; ++k) {
    if (!(x.norm() <= guard)) throw DivergenceError("state norm exceeded guard", k);
    Vector y = sys.C() * x;
    Vector u = policy(k, static_cast<const Vector&>(y));
    if (u.size() != sys.m()) throw DimensionError("simulate: policy returned wrong size");
    tr.states.push_back(x);
    tr.outputs.push_back(std::move(y));
    x = sys.A() * x + sys.B() * u;
    tr.inputs.push_back(std::move(u));
  }
  if (!(x.norm() <= guard)) throw DivergenceError("state norm exceeded guard", steps);
  tr.final_state = std::move(x);
  return tr;
}

inline Vector luenberger_step(const LtiSystem& sys, const Matrix& L, const Vector& xhat,
                              const Vector& u, const Vector& y) {
  return (sys.A() - L * sys.C()) * xhat + sys.B() * u + L * y;
}

// Real coefficients of prod (z - r_i), highest power first, leading 1.
inline std::vector<double> poly_from_roots(const std::vector<Complex>& roots) {
  std::vector<Complex> c{Complex(1.0)};
  for (const Complex& r : roots) {
    std::vector<Complex> next(c.size() + 1, Complex(0.0));
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= r * c[i];
    }
    c = std::move(next);
  }
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::abs(c[i].imag()) > 1e-9 * std::max(1.0, std::abs(c[i])))
      throw DimensionError("poles must be closed under conjugation");
    out[i] = c[i].real();
  }
  return out;
}

inline Matrix poly_eval(const std::vector<double>& desc, const Matrix& A) {
  Matrix acc = Matrix::Zero(A.rows(), A.cols());
  for (double c : desc) acc = acc * A + c * Matrix::Identity(A.rows(), A.cols());
  return acc;
}

// Faddeev-LeVerrier: Y_1 = I, Y_{i+1} = Y_i F + c_i I with
// det(zI - F) = z^n + c_1 z^{n-1} + ... + c_n. Returns {Y_1..Y_n} and {c_1..c_n}.
struct AdjugateExpansion {
  std::vector<Matrix> Y;
  std::vector<double> c;
};

inline AdjugateExpansion adjugate_expansion(const Matrix& F) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n) throw DimensionError("adjugate: matrix must be square");
  AdjugateExpansion out;
  const Matrix I = Matrix::Identity(n, n);
  Matrix Y = I;
  for (Eigen::Index i = 1; i <= n; ++i) {
    out.Y.push_back(Y);
    const double ci = -(F * Y).trace() / static_cast<double>(i);
    out.c.push_back(ci);
    Y = Y * F + ci * I;
  }
  return out;
}

namespace detail {

inline Matrix observability_matrix(const Matrix& A, const Matrix& C) {
  const Eigen::Index n = A.rows(), p = C.rows();
  Matrix O(n * p, n);
  Matrix row = C;
  for (Eigen::Index i = 0; i < n; ++i) {
    O.middleRows(i * p, p) = row;
    row = row * A;
  }
  return O;
}

// Ackermann for a single output row c: spectrum of (A - l c) = roots of desc.
inline Vector ackermann_single(const Matrix& A, const RowVector& c,
                               const std::vector<double>& desc) {
  const Eigen::Index n = A.rows();
  Matrix O = observability_matrix(A, Matrix(c));
  Eigen::FullPivLU<Matrix> lu(O);
  if (lu.rank() < n) throw ObservabilityError("single-output reduction is unobservable");
  Vector en = Vector::Zero(n);
  en(n - 1) = 1.0;
  return poly_eval(desc, A) * lu.solve(en);
}

inline double spectrum_mismatch(const Matrix& F, std::vector<Complex> want) {
  const Eigen::VectorXcd got = Eigen::EigenSolver<Matrix>(F, false).eigenvalues();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < got.size(); ++i) {
    auto best = want.begin();
    for (auto it = want.begin(); it != want.end(); ++it)
      if (std::abs(*it - got(i)) < std::abs(*best - got(i))) best = it;
    worst = std::max(worst, std::abs(*best - got(i)));
    want.erase(best);
  }
  return worst;
}

}  // namespace detail

// Observer gain L with spec(A - LC) equal to the requested poles. Multi-output
// systems are reduced to one output through a random combination w'C, after an
// optional random pre-feedback that makes the state matrix cyclic.
inline Matrix place_observer_poles(const LtiSystem& sys, const std::vector<Complex>& poles) {
  const Eigen::Index n = sys.n(), p = sys.p();
  if (static_cast<Eigen::Index>(poles.size()) != n)
    throw DimensionError("place_observer_poles: need exactly n poles");
  if (!is_observable(sys.A(), sys.C())) throw ObservabilityError("(A, C) is not observable");
  const std::vector<double> desc = poly_from_roots(poles);
  const Matrix& A = sys.A();
  const Matrix& C = sys.C();

  if (p == 1) return detail::ackermann_single(A, C.row(0), desc);

  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> g(0.0, 1.0);
  const double scale = std::max(1.0, A.norm()) / std::max(1e-12, C.norm());
  double best_err = std::numeric_limits<double>::infinity();
  Matrix best;
  for (int attempt = 0; attempt < 20; ++attempt) {
    Matrix L0 = Matrix::Zero(n, p);
    if (attempt > 0) L0 = Matrix::NullaryExpr(n, p, [&] { return scale * g(rng); });
    Vector w = Vector::NullaryExpr(p, [&] { return g(rng); });
    const Matrix A0 = A - L0 * C;
    const RowVector c = w.transpose() * C;
    Eigen::FullPivLU<Matrix> lu(detail::observability_matrix(A0, Matrix(c)));
    if (lu.rank() < n) continue;
    const Vector l = detail::ackermann_single(A0, c, desc);
    Matrix L = L0 + l * w.transpose();
    const double err = detail::spectrum_mismatch(A - L * C, poles);
    if (err < best_err) {
      best_err = err;
      best = L;
    }
    if (err < 1e-10) break;
  }
  if (best.size() == 0) throw ObservabilityError("pole placement failed to find a cyclic reduction");
  return best;
}

struct Reconstructor {
  Matrix M_ybar;
  Matrix M_ubar;
  Eigen::Index N = 0;

  // ybar/ubar stacked newest first: (y(k-1), ..., y(k-N)).
  Vector estimate(const Vector& ybar, const Vector& ubar) const {
    return M_ybar * ybar + M_ubar * ubar;
  }
};

inline Reconstructor build_reconstructor(const LtiSystem& sys, Eigen::Index N) {
  const Eigen::Index n = sys.n(), m = sys.m(), p = sys.p();
  if (N < 1) throw WindowTooShortError("window length must be positive");
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  const Matrix& C = sys.C();

  std::vector<Matrix> Apow(N + 1);
  Apow[0] = Matrix::Identity(n, n);
  for (Eigen::Index i = 1; i <= N; ++i) Apow[i] = Apow[i - 1] * A;

  Matrix V(N * p, n), U(n, N * m), T = Matrix::Zero(N * p, N * m);
  for (Eigen::Index r = 0; r < N; ++r) {
    V.middleRows(r * p, p) = C * Apow[N - 1 - r];
    U.middleCols(r * m, m) = Apow[r] * B;
    for (Eigen::Index c = r + 1; c < N; ++c)
      T.block(r * p, c * m, p, m) = C * Apow[c - r - 1] * B;
  }
  Eigen::FullPivLU<Matrix> lu(V);
  if (lu.rank() < n) throw WindowTooShortError("window shorter than the observability index");
  const Matrix VtV = V.transpose() * V;
  Reconstructor rc;
  rc.N = N;
  rc.M_ybar = Apow[N] * VtV.ldlt().solve(V.transpose());
  rc.M_ubar = U - rc.M_ybar * T;
  return rc;
}

struct NoiseSpec {
  int num_sinusoids = 100;
  std::pair<double, double> amp_range{0.0, 1.0};
  std::pair<double, double> freq_range{0.05, std::numbers::pi};
  std::pair<double, double> phase_range{0.0, 2.0 * std::numbers::pi};
  std::uint64_t seed = 0;

  void validate() const {
    if (num_sinusoids < 0) throw DimensionError("num_sinusoids must be non-negative");
    if (amp_range.first < 0 || amp_range.second < amp_range.first)
      throw DimensionError("amp_range must be a non-negative interval");
    if (freq_range.first < 0 || freq_range.second > std::numbers::pi + 1e-12 ||
        freq_range.second < freq_range.first)
      throw DimensionError("freq_range must lie in [0, pi]");
    if (phase_range.second < phase_range.first)
      throw DimensionError("phase_range must be an interval");
  }
};

// Sum of sinusoids per channel; parameters drawn once at construction.
class ExplorationNoise {
 public:
  ExplorationNoise() = default;

  ExplorationNoise(const NoiseSpec& spec, Eigen::Index channels) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    auto draw = [&rng](std::pair<double, double> r) {
      return std::uniform_real_distribution<double>(r.first, r.second)(rng);
    };
    amp_.resize(channels, spec.num_sinusoids);
    freq_.resize(channels, spec.num_sinusoids);
    phase_.resize(channels, spec.num_sinusoids);
    for (Eigen::Index c = 0; c < channels; ++c) {
      for (int i = 0; i < spec.num_sinusoids; ++i) {
        amp_(c, i) = draw(spec.amp_range);
        freq_(c, i) = draw(spec.freq_range);
        phase_(c, i) = draw(spec.phase_range);
      }
    }
  }

  Vector operator()(long k) const {
    Vector out(amp_.rows());
    const double kk = static_cast<double>(k);
    for (Eigen::Index c = 0; c < amp_.rows(); ++c) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < amp_.cols(); ++i)
        s += amp_(c, i) * std::sin(freq_(c, i) * kk + phase_(c, i));
      out(c) = s;
    }
    return out;
  }

  Eigen::Index channels() const { return amp_.rows(); }

 private:
  Matrix amp_, freq_, phase_;
};

inline Vector exploration_noise(const NoiseSpec& spec, Eigen::Index channels, long k) {
  return ExplorationNoise(spec, channels)(k);
}

}  // namespace ofb
