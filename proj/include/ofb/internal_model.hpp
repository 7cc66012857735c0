#pragma once

#include <optional>
#include <vector>

#include "ofb/error.hpp"
#include "ofb/lti.hpp"
#include "ofb/matops.hpp"

namespace ofb {

inline std::vector<Matrix> adjugate_coefficients(const Matrix& F) {
  return adjugate_expansion(F).Y;
}

struct CharPoly {
  // Monic z^n + alpha_{n-1} z^{n-1} + ... + alpha_0, stored as alpha_0..alpha_{n-1}.
  std::vector<double> alpha;
  std::optional<std::vector<Complex>> roots;

  Eigen::Index degree() const { return static_cast<Eigen::Index>(alpha.size()); }

  static CharPoly from_roots(const std::vector<Complex>& r) {
    const std::vector<double> desc = poly_from_roots(r);
    CharPoly cp;
    cp.alpha.assign(desc.rbegin(), desc.rend() - 1);
    cp.roots = r;
    return cp;
  }

  static CharPoly from_real_roots(const std::vector<double>& r) {
    return from_roots(std::vector<Complex>(r.begin(), r.end()));
  }

  static CharPoly of_matrix(const Matrix& F) {
    const auto ex = adjugate_expansion(F);
    CharPoly cp;
    cp.alpha.assign(ex.c.rbegin(), ex.c.rend());
    return cp;
  }

  std::vector<Complex> compute_roots() const {
    if (roots) return *roots;
    const Eigen::Index n = degree();
    Matrix comp = Matrix::Zero(n, n);
    if (n > 1) comp.topRightCorner(n - 1, n - 1).setIdentity();
    for (Eigen::Index i = 0; i < n; ++i) comp(n - 1, i) = -alpha[i];
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(comp, false).eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
  }

  bool is_schur() const {
    for (const Complex& r : compute_roots())
      if (std::abs(r) >= 1.0) return false;
    return true;
  }

  double distance(const CharPoly& other) const {
    if (other.degree() != degree()) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i)
      d = std::max(d, std::abs(alpha[i] - other.alpha[i]) / std::max(1.0, std::abs(alpha[i])));
    return d;
  }
};

inline Matrix companion_from_poly(const CharPoly& cp) {
  const Eigen::Index n = cp.degree();
  if (n == 0) throw DimensionError("companion: empty polynomial");
  Matrix comp = Matrix::Zero(n, n);
  if (n > 1) comp.topRightCorner(n - 1, n - 1).setIdentity();
  for (Eigen::Index i = 0; i < n; ++i) comp(n - 1, i) = -cp.alpha[i];
  return comp;
}

class InternalModel {
 public:
  InternalModel(Eigen::Index m, Eigen::Index p, const CharPoly& cp,
                std::optional<Matrix> A_eps, Vector eta0)
      : n_(cp.degree()), m_(m), p_(p), cp_(cp) {
    if (n_ < 1 || m_ < 1 || p_ < 1) throw DimensionError("internal model: empty dimension");
    if (!cp_.is_schur()) throw InstabilityError("internal model: polynomial roots must lie inside the unit circle");
    comp_ = companion_from_poly(cp_);
    A_eps_ = A_eps ? *A_eps : comp_;
    if (A_eps_.rows() != n_ || A_eps_.cols() != n_) throw DimensionError("A_eps must be n x n");
    if (CharPoly::of_matrix(A_eps_).distance(cp_) > 1e-8)
      throw DimensionError("A_eps does not share the observer characteristic polynomial");
    if (eta0.size() != nz()) throw DimensionError("eta0 must have length n(m+p+1)");
    eta_ = std::move(eta0);
    eta0_ = eta_;

    G1_ = Matrix::Zero(nz(), nz());
    G2_ = Matrix::Zero(nz(), m_ + p_);
    for (Eigen::Index c = 0; c < m_ + p_; ++c) {
      G1_.block(c * n_, c * n_, n_, n_) = comp_;
      G2_(c * n_ + n_ - 1, c) = 1.0;
    }
    G1_.bottomRightCorner(n_, n_) = A_eps_;
  }

  Eigen::Index n() const { return n_; }
  Eigen::Index m() const { return m_; }
  Eigen::Index p() const { return p_; }
  Eigen::Index nz() const { return n_ * (m_ + p_ + 1); }

  Eigen::Index u_offset(Eigen::Index i) const { return i * n_; }
  Eigen::Index y_offset(Eigen::Index j) const { return (m_ + j) * n_; }
  Eigen::Index eps_offset() const { return (m_ + p_) * n_; }

  const Matrix& G1() const { return G1_; }
  const Matrix& G2() const { return G2_; }
  const Matrix& companion() const { return comp_; }
  const Matrix& A_eps() const { return A_eps_; }
  const CharPoly& char_poly() const { return cp_; }
  const Vector& eta() const { return eta_; }
  const Vector& eta0() const { return eta0_; }
  Vector eta_eps0() const { return eta0_.tail(n_); }

  Vector advance(const Vector& eta, const Vector& u, const Vector& y) const {
    if (eta.size() != nz() || u.size() != m_ || y.size() != p_)
      throw DimensionError("internal model: input dimension mismatch");
    Vector zeta(m_ + p_);
    zeta << u, y;
    return G1_ * eta + G2_ * zeta;
  }

  const Vector& step(const Vector& u, const Vector& y) {
    eta_ = advance(eta_, u, y);
    return eta_;
  }

  void reset() { eta_ = eta0_; }
  void set_eta(const Vector& eta) {
    if (eta.size() != nz()) throw DimensionError("internal model: eta length mismatch");
    eta_ = eta;
  }

 private:
  Eigen::Index n_, m_, p_;
  CharPoly cp_;
  Matrix comp_, A_eps_, G1_, G2_;
  Vector eta_, eta0_;
};

inline Vector alternating_eta_eps0(Eigen::Index n, double amplitude) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = (i % 2 == 0 ? amplitude : -amplitude);
  return v;
}

struct ParameterizationMap {
  Matrix M;
  Eigen::Index rank = 0;
  double residual = 0.0;
  Eigen::Index n = 0, m = 0, p = 0;

  Matrix M_u(Eigen::Index i) const { return M.middleCols(i * n, n); }
  Matrix M_y(Eigen::Index j) const { return M.middleCols((m + j) * n, n); }
  Matrix M_eps() const { return M.rightCols(n); }
};

namespace detail {

// [Y_n v, ..., Y_1 v]
inline Matrix adjugate_block(const std::vector<Matrix>& Y, const Vector& v) {
  const auto n = static_cast<Eigen::Index>(Y.size());
  Matrix out(v.size(), n);
  for (Eigen::Index i = 0; i < n; ++i) out.col(i) = Y[n - 1 - i] * v;
  return out;
}

}  // namespace detail

struct RankCheck {
  bool full = false;
  Eigen::Index rank = 0;
};

inline RankCheck check_rank_M(const Matrix& M, double tol_rank = kAutoRankTol) {
  Eigen::JacobiSVD<Matrix> svd(M);
  const double tol = resolve_rank_tol(tol_rank, M.rows(), M.cols());
  const Eigen::Index r = rank_from_singular_values(svd.singularValues(), tol);
  return {r == M.rows(), r};
}

inline RankCheck check_rank_M(const ParameterizationMap& map, double tol_rank = kAutoRankTol) {
  return check_rank_M(map.M, tol_rank);
}

inline ParameterizationMap build_parameterization(const LtiSystem& sys, const Matrix& L,
                                                  const InternalModel& model, const Vector& eps0) {
  const Eigen::Index n = sys.n(), m = sys.m(), p = sys.p();
  if (model.n() != n || model.m() != m || model.p() != p)
    throw DimensionError("parameterization: internal model dimensions disagree with plant");
  if (L.rows() != n || L.cols() != p) throw DimensionError("parameterization: L must be n x p");
  if (eps0.size() != n) throw DimensionError("parameterization: eps0 must have length n");
  const Matrix AL = sys.A() - L * sys.C();
  if (CharPoly::of_matrix(AL).distance(model.char_poly()) > 1e-6)
    throw DimensionError("parameterization: A - LC does not match the model polynomial");

  const auto Y = adjugate_coefficients(AL);
  const auto Ye = adjugate_coefficients(model.A_eps());
  const Matrix Meta = detail::adjugate_block(Ye, model.eta_eps0());
  Eigen::FullPivLU<Matrix> lu(Meta);
  const Eigen::JacobiSVD<Matrix> svd(Meta);
  const Vector& s = svd.singularValues();
  if (!lu.isInvertible() || s(n - 1) <= 1e-12 * s(0))
    throw BadInitializerError("eta_eps(0) makes the error-channel block singular");

  ParameterizationMap map;
  map.n = n;
  map.m = m;
  map.p = p;
  map.M.resize(n, model.nz());
  for (Eigen::Index i = 0; i < m; ++i)
    map.M.middleCols(model.u_offset(i), n) = detail::adjugate_block(Y, sys.B().col(i));
  for (Eigen::Index j = 0; j < p; ++j)
    map.M.middleCols(model.y_offset(j), n) = detail::adjugate_block(Y, L.col(j));
  map.M.rightCols(n) = detail::adjugate_block(Y, eps0) * lu.inverse();
  map.rank = check_rank_M(map.M).rank;
  return map;
}

// Least-squares fit of x(k) = M eta(k).
inline ParameterizationMap identify_parameterization(const std::vector<Vector>& xs,
                                                     const std::vector<Vector>& etas,
                                                     Eigen::Index m = 0, Eigen::Index p = 0) {
  if (xs.size() != etas.size() || xs.empty())
    throw DimensionError("identify: sample sequences must be non-empty and equal length");
  const auto N = static_cast<Eigen::Index>(xs.size());
  const Eigen::Index n = xs[0].size(), nz = etas[0].size();
  Matrix E(N, nz), X(N, n);
  for (Eigen::Index k = 0; k < N; ++k) {
    E.row(k) = etas[k].transpose();
    X.row(k) = xs[k].transpose();
  }
  const Eigen::Index r = N >= nz ? numerical_rank(E) : N;
  if (N < nz || r < nz)
    throw InsufficientExcitationError("identify: internal-state samples are not exciting",
                                      nz, {static_cast<long>(r)});
  const LeastSquares ls(E);
  ParameterizationMap map;
  map.M = ls.solve(X).transpose();
  map.residual = (E * map.M.transpose() - X).norm() / std::max(1e-300, X.norm());
  map.rank = check_rank_M(map.M).rank;
  map.n = n;
  map.m = m;
  map.p = p;
  return map;
}

}  // namespace ofb
