#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ofb/error.hpp"

namespace ofb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline constexpr double kDefaultSymTol = 1e-10;

// 0 selects max(N, q) * machine epsilon on the column-equilibrated matrix.
inline constexpr double kAutoRankTol = 0.0;

inline Eigen::Index tri_size(Eigen::Index n) { return n * (n + 1) / 2; }

inline Eigen::Index tri_dim(Eigen::Index len) {
  const auto n = static_cast<Eigen::Index>(
      std::llround((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
  if (tri_size(n) != len) {
    throw DimensionError("length " + std::to_string(len) + " is not triangular");
  }
  return n;
}

struct SymVec {
  Vector entries;
  Eigen::Index dim = 0;
};

inline void require_symmetric(const Matrix& C, double tol_sym, const char* what) {
  if (C.rows() != C.cols()) {
    throw AsymmetricInputError(std::string(what) + ": matrix is not square");
  }
  const double scale = std::max(1.0, C.cwiseAbs().maxCoeff());
  if ((C - C.transpose()).cwiseAbs().maxCoeff() > tol_sym * scale) {
    throw AsymmetricInputError(std::string(what) + ": matrix is not symmetric");
  }
}

inline SymVec vech(const Matrix& C, double tol_sym = kDefaultSymTol) {
  require_symmetric(C, tol_sym, "vech");
  const Eigen::Index n = C.rows();
  SymVec out{Vector(tri_size(n)), n};
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) out.entries(k++) = C(i, j);
  return out;
}

inline Matrix unvech(const Vector& v, Eigen::Index n) {
  if (v.size() != tri_size(n)) throw DimensionError("unvech: length mismatch");
  Matrix P(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) P(i, j) = P(j, i) = v(k++);
  return P;
}

inline Matrix unvech(const SymVec& s) { return unvech(s.entries, s.dim); }

inline Vector vec(const Matrix& B) {
  return Eigen::Map<const Vector>(B.data(), B.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw DimensionError("unvec: length mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline Matrix kron(const Matrix& X, const Matrix& Y) {
  Matrix out(X.rows() * Y.rows(), X.cols() * Y.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      out.block(i * Y.rows(), j * Y.cols(), Y.rows(), Y.cols()) = X(i, j) * Y;
  return out;
}

inline Matrix sym(const Matrix& X) { return 0.5 * (X + X.transpose()); }

// vech(2vv' - dia(v)^2): squares on the diagonal slots, doubled products elsewhere.
inline RowVector delta_v(const Vector& v) {
  const Eigen::Index n = v.size();
  RowVector row(tri_size(n));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j)
      row(k++) = (i == j ? 1.0 : 2.0) * v(i) * v(j);
  return row;
}

// (w kron v)', so that delta_vw(v, w) * vec(X) = v' X w.
inline RowVector delta_vw(const Vector& v, const Vector& w) {
  RowVector row(v.size() * w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j)
    row.segment(j * v.size(), v.size()) = w(j) * v.transpose();
  return row;
}

struct RegressorLayout {
  Eigen::Index quad = 0;
  Eigen::Index bilinear = 0;
  Eigen::Index quad_u = 0;

  Eigen::Index total() const { return quad + bilinear + quad_u; }
  static RegressorLayout for_dims(Eigen::Index nz, Eigen::Index m) {
    return {tri_size(nz), nz * m, tri_size(m)};
  }
};

struct Regressor {
  RowVector row;
  RegressorLayout layout;

  bool consistent() const { return row.size() == layout.total(); }
};

// [delta_v(a), 2 delta_vw(a, b), delta_v(b)]
inline Regressor quadratic_regressor(const Vector& a, const Vector& b) {
  Regressor r{RowVector(), RegressorLayout::for_dims(a.size(), b.size())};
  r.row.resize(r.layout.total());
  r.row << delta_v(a), 2.0 * delta_vw(a, b), delta_v(b);
  return r;
}

inline double resolve_rank_tol(double tol_rank, Eigen::Index rows, Eigen::Index cols) {
  if (tol_rank > 0) return tol_rank;
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
}

inline Vector column_scales(const Matrix& A) {
  Vector d = A.colwise().norm().transpose();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (!(d(i) > 0)) d(i) = 1.0;
  return d;
}

inline Eigen::Index rank_from_singular_values(const Vector& s, double tol) {
  if (s.size() == 0 || !(s(0) > 0)) return 0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++r;
  return r;
}

// Rank of A after scaling every column to unit norm.
inline Eigen::Index numerical_rank(const Matrix& A, double tol_rank = kAutoRankTol) {
  if (A.size() == 0) return 0;
  const Vector d = column_scales(A);
  Eigen::JacobiSVD<Matrix> svd(A * d.cwiseInverse().asDiagonal());
  return rank_from_singular_values(svd.singularValues(),
                                   resolve_rank_tol(tol_rank, A.rows(), A.cols()));
}

// Factor once, solve many right-hand sides. Columns are equilibrated before the
// SVD so that regressors mixing tiny and huge magnitudes keep their rank.
class LeastSquares {
 public:
  LeastSquares() = default;

  explicit LeastSquares(const Matrix& A, double tol_rank = kAutoRankTol)
      : rows_(A.rows()), cols_(A.cols()) {
    if (A.rows() < A.cols()) {
      throw RankDeficiencyError("least squares: fewer rows than unknowns", A.rows(),
                                A.cols());
    }
    scale_ = column_scales(A);
    svd_.compute(A * scale_.cwiseInverse().asDiagonal(),
                 Eigen::ComputeThinU | Eigen::ComputeThinV);
    rank_ = rank_from_singular_values(svd_.singularValues(),
                                      resolve_rank_tol(tol_rank, A.rows(), A.cols()));
    if (rank_ < A.cols()) {
      throw RankDeficiencyError("least squares: rank-deficient matrix", rank_, A.cols());
    }
  }

  Eigen::Index rank() const { return rank_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

  double condition() const {
    const Vector& s = svd_.singularValues();
    return s(0) / s(s.size() - 1);
  }

  Matrix solve(const Matrix& rhs) const {
    if (rhs.rows() != rows_) throw DimensionError("least squares: rhs row mismatch");
    const Vector& s = svd_.singularValues();
    Matrix tmp = svd_.matrixU().transpose() * rhs;
    tmp = s.cwiseInverse().asDiagonal() * tmp;
    return scale_.cwiseInverse().asDiagonal() * (svd_.matrixV() * tmp);
  }

  Vector solve(const Vector& rhs) const { return solve(Matrix(rhs)).col(0); }

 private:
  Eigen::JacobiSVD<Matrix> svd_;
  Vector scale_;
  Eigen::Index rank_ = 0;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
};

inline Vector lstsq(const Matrix& A, const Vector& rhs, double tol_rank = kAutoRankTol) {
  return LeastSquares(A, tol_rank).solve(rhs);
}

}  // namespace ofb
