#pragma once

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ofb/error.hpp"
#include "ofb/internal_model.hpp"
#include "ofb/lti.hpp"
#include "ofb/matops.hpp"
#include "ofb/riccati.hpp"

namespace ofb {

enum class BilinearForm { plain, r_weighted };
enum class Mode { VI, PI };
enum class Utility { standard, input_only, augmented };

inline const char* to_string(Mode m) { return m == Mode::VI ? "VI" : "PI"; }

struct Sample {
  Vector eta;
  Vector eta_next;
  Vector u;
  Vector y;
};

struct Blocks {
  Matrix Pee;  // n_z x n_z
  Matrix Peu;  // n_z x m
  Matrix Puu;  // m x m
};

namespace detail {

inline Blocks unpack(const Vector& theta, Eigen::Index nz, Eigen::Index m, BilinearForm form,
                     const Matrix& R) {
  const RegressorLayout lay = RegressorLayout::for_dims(nz, m);
  if (theta.size() != lay.total()) throw DimensionError("unpack: parameter length mismatch");
  Blocks b;
  b.Pee = unvech(theta.head(lay.quad), nz);
  b.Peu = unvec(theta.segment(lay.quad, lay.bilinear), nz, m);
  if (form == BilinearForm::r_weighted) b.Peu = b.Peu * R;
  b.Puu = unvech(theta.tail(lay.quad_u), m);
  return b;
}

inline RowVector bilinear_row(const Vector& eta, const Vector& u, BilinearForm form,
                              const Matrix& R) {
  return form == BilinearForm::plain ? delta_vw(eta, u) : delta_vw(eta, Vector(R * u));
}

inline Matrix solve_small(const Matrix& S, const Matrix& rhs, const char* what) {
  Eigen::FullPivLU<Matrix> lu(S);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible() || !std::isfinite(S.norm()))
    throw IllConditionedError(std::string(what) + ": block is not invertible");
  return lu.solve(rhs);
}

}  // namespace detail

// Stacked learning data. Immutable after construction; the regressor
// factorization and the linear maps it induces are computed once and shared
// by every iteration that uses this batch.
class RegressorBatch {
 public:
  RegressorBatch() = default;

  RegressorBatch(std::vector<Sample> samples, Matrix Qy, Matrix R, Matrix Qeps = Matrix(),
                 BilinearForm form = BilinearForm::plain, double tol_rank = kAutoRankTol)
      : samples_(std::move(samples)), Qy_(std::move(Qy)), R_(std::move(R)),
        Qeps_(std::move(Qeps)), form_(form), tol_rank_(tol_rank) {
    if (samples_.empty()) throw DimensionError("regressor batch: no samples");
    nz_ = samples_[0].eta.size();
    m_ = samples_[0].u.size();
    p_ = samples_[0].y.size();
    if (Qeps_.size() == 0) Qeps_ = Matrix::Zero(nz_, nz_);
    if (Qy_.rows() != p_ || R_.rows() != m_ || Qeps_.rows() != nz_)
      throw DimensionError("regressor batch: weight dimensions disagree with samples");
    layout_ = RegressorLayout::for_dims(nz_, m_);
    const auto N = static_cast<Eigen::Index>(samples_.size());
    Pi_.resize(N, layout_.total());
    Psi_.resize(N, tri_size(nz_));
    util_y_.resize(N);
    util_u_.resize(N);
    util_eta_.resize(N);
    for (Eigen::Index k = 0; k < N; ++k) {
      const Sample& s = samples_[k];
      Pi_.row(k) = row_for(s.eta, s.u);
      Psi_.row(k) = delta_v(s.eta_next);
      util_u_(k) = s.u.dot(R_ * s.u);
      util_y_(k) = s.y.dot(Qy_ * s.y) + util_u_(k);
      util_eta_(k) = s.eta.dot(Qeps_ * s.eta);
    }
    solver_ = LeastSquares(Pi_, tol_rank_);
    T_ = solver_.solve(Psi_);
    l_y_ = solver_.solve(util_y_);
    l_u_ = solver_.solve(util_u_);
    l_eta_ = solver_.solve(util_eta_);
    l_yq_ = l_y_ - l_u_;
  }

  const std::vector<Sample>& samples() const { return samples_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(samples_.size()); }
  Eigen::Index nz() const { return nz_; }
  Eigen::Index m() const { return m_; }
  Eigen::Index p() const { return p_; }
  Eigen::Index n_phi() const { return layout_.total(); }
  const RegressorLayout& layout() const { return layout_; }
  const Matrix& Pi() const { return Pi_; }
  const Matrix& Psi() const { return Psi_; }
  const Vector& util_y() const { return util_y_; }
  const Vector& util_u_only() const { return util_u_; }
  const Vector& util_eta() const { return util_eta_; }
  const Matrix& Qy() const { return Qy_; }
  const Matrix& R() const { return R_; }
  const Matrix& Qeps() const { return Qeps_; }
  BilinearForm form() const { return form_; }
  double tol_rank() const { return tol_rank_; }
  Eigen::Index rank() const { return solver_.rank(); }
  double condition() const { return solver_.condition(); }

  RowVector row_for(const Vector& eta, const Vector& u) const {
    RowVector r(layout_.total());
    r << delta_v(eta), 2.0 * detail::bilinear_row(eta, u, form_, R_), delta_v(u);
    return r;
  }

  // Least-squares solution of Pi theta = Psi vech(P) + utility.
  Vector solve_value(const Matrix& P, Utility util) const {
    if (P.rows() != nz_ || P.cols() != nz_) throw DimensionError("value matrix must be n_z x n_z");
    Vector theta = T_ * vech(sym(P)).entries;
    switch (util) {
      case Utility::standard: theta += l_y_; break;
      case Utility::input_only: theta += l_u_; break;
      case Utility::augmented: theta += l_y_ + l_eta_; break;
    }
    return theta;
  }

  Blocks unpack(const Vector& theta) const { return detail::unpack(theta, nz_, m_, form_, R_); }

  // Blocks of the quadratic form matched by Psi vech(P) alone (linear in P).
  Blocks propagate(const Matrix& P) const { return unpack(T_ * vech(sym(P)).entries); }
  // Blocks matched by the output cost y'Qy y alone.
  Blocks output_cost() const { return unpack(l_yq_); }

 private:
  std::vector<Sample> samples_;
  Matrix Qy_, R_, Qeps_;
  BilinearForm form_ = BilinearForm::plain;
  double tol_rank_ = kAutoRankTol;
  Eigen::Index nz_ = 0, m_ = 0, p_ = 0;
  RegressorLayout layout_;
  Matrix Pi_, Psi_;
  Vector util_y_, util_u_, util_eta_;
  LeastSquares solver_;
  Matrix T_;
  Vector l_y_, l_u_, l_eta_, l_yq_;
};

// The learner sees y only; the state is kept for ground-truth bookkeeping.
class SimulatedPlant {
 public:
  SimulatedPlant(const LtiSystem& sys, Vector x0, double guard = kDivergenceGuard)
      : sys_(&sys), x_(std::move(x0)), guard_(guard) {
    if (x_.size() != sys.n()) throw DimensionError("plant: x0 has wrong length");
  }

  Vector output() const { return sys_->C() * x_; }

  void apply(const Vector& u) {
    x_ = sys_->A() * x_ + sys_->B() * u;
    ++k_;
    if (!(x_.norm() <= guard_)) throw DivergenceError("plant state norm exceeded guard", k_);
  }

  long time() const { return k_; }
  const Vector& ground_truth_state() const { return x_; }

 private:
  const LtiSystem* sys_;
  Vector x_;
  long k_ = 0;
  double guard_;
};

struct CollectOptions {
  long max_steps = 2000;
  Matrix Qy;
  Matrix R;
  Matrix Qeps;
  BilinearForm form = BilinearForm::plain;
  double tol_rank = kAutoRankTol;
};

struct CollectRecord {
  std::vector<Vector> states;  // ground truth, for harness output only
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;
  std::vector<long> rank_profile;
};

// Drives u = -K0 eta + xi until the stacked regressor reaches full column rank.
inline RegressorBatch collect(SimulatedPlant& plant, InternalModel& model, const Matrix& K0,
                              const ExplorationNoise& noise, const CollectOptions& opt,
                              CollectRecord* record = nullptr) {
  const Eigen::Index nz = model.nz(), m = model.m();
  if (K0.rows() != m || K0.cols() != nz) throw DimensionError("collect: K0 must be m x n_z");
  if (noise.channels() != m) throw DimensionError("collect: noise channel count must equal m");
  const Eigen::Index nphi = RegressorLayout::for_dims(nz, m).total();
  if (opt.max_steps < nphi)
    throw InsufficientExcitationError("collect: max_steps below the regressor width", nphi, {});

  std::vector<Sample> samples;
  std::vector<long> profile;
  Matrix Pi(0, nphi);
  const Matrix Rw = opt.R.size() ? opt.R : Matrix::Identity(m, m);
  for (long k = 0; k < opt.max_steps; ++k) {
    const Vector y = plant.output();
    const Vector eta = model.eta();
    const Vector u = -K0 * eta + noise(plant.time());
    if (record) {
      record->states.push_back(plant.ground_truth_state());
      record->inputs.push_back(u);
      record->outputs.push_back(y);
    }
    plant.apply(u);
    const Vector eta_next = model.step(u, y);
    samples.push_back({eta, eta_next, u, y});

    RowVector row(nphi);
    row << delta_v(eta), 2.0 * detail::bilinear_row(eta, u, opt.form, Rw), delta_v(u);
    Pi.conservativeResize(Pi.rows() + 1, Eigen::NoChange);
    Pi.row(Pi.rows() - 1) = row;
    if (Pi.rows() < nphi) continue;
    const Eigen::Index r = numerical_rank(Pi, opt.tol_rank);
    profile.push_back(static_cast<long>(r));
    if (r == nphi) {
      if (record) record->rank_profile = profile;
      return RegressorBatch(std::move(samples), opt.Qy, Rw, opt.Qeps, opt.form, opt.tol_rank);
    }
  }
  if (record) record->rank_profile = profile;
  throw InsufficientExcitationError("collect: rank condition not met within max_steps", nphi,
                                    std::move(profile));
}

struct ViStep {
  Matrix Pee, Peu, Puu;
  Matrix P_next;
  Matrix K;
};

inline ViStep vi_step(const RegressorBatch& batch, const Matrix& Pj,
                      Utility util = Utility::standard) {
  const Blocks b = batch.unpack(batch.solve_value(Pj, util));
  ViStep out;
  out.Pee = sym(b.Pee);
  out.Peu = b.Peu;
  out.Puu = sym(b.Puu);
  out.K = detail::solve_small(out.Puu, Matrix(out.Peu.transpose()), "vi_step P_uu");
  out.P_next = sym(out.Pee - out.Peu * out.K);
  return out;
}

struct PiStep {
  Matrix P, PAB, PBB;
  Matrix K_next;
};

inline constexpr double kValueBlowUp = 1e12;

enum class PiSolve { factored, literal };

namespace detail {

// With u_hat = u + K eta the PI unknowns (P, X, Y) describe, in (eta, u)
// coordinates, the form with blocks (P + XK + K'X' + K'YK, X + K'Y, Y). Matching
// that against the batch factorization leaves a linear equation in P alone.
inline PiStep pi_step_factored(const RegressorBatch& batch, const Matrix& K, const Matrix* warm,
                               long max_sweeps, double rel_tol) {
  const Matrix& R = batch.R();
  auto reduce = [&K](const Blocks& b) {
    const Matrix cross = b.Peu * K;
    return Matrix(sym(b.Pee - cross - cross.transpose() + K.transpose() * b.Puu * K));
  };
  const Blocks c = batch.output_cost();
  const Matrix c_red = reduce(c) + K.transpose() * R * K;
  Matrix P = warm ? *warm : c_red;
  bool settled = false;
  for (long i = 0; i < max_sweeps; ++i) {
    Matrix next = reduce(batch.propagate(P)) + c_red;
    const double step = (next - P).norm();
    P = std::move(next);
    if (!std::isfinite(step) || !std::isfinite(P.norm())) break;
    if (step <= rel_tol * std::max(1e-300, P.norm())) {
      settled = true;
      break;
    }
  }
  if (!settled)
    throw InadmissiblePolicyError("pi_step: data-based policy evaluation does not settle");
  PiStep out;
  out.P = P;
  const Blocks a = batch.propagate(P);
  out.PBB = sym(a.Puu + c.Puu);
  out.PAB = a.Peu + c.Peu - K.transpose() * out.PBB;
  return out;
}

inline PiStep pi_step_literal(const RegressorBatch& batch, const Matrix& Kj) {
  const Matrix& R = batch.R();
  const Matrix KRK = Kj.transpose() * R * Kj;
  Matrix Pih(batch.size(), batch.n_phi());
  Vector rhs(batch.size());
  for (Eigen::Index k = 0; k < batch.size(); ++k) {
    const Sample& s = batch.samples()[k];
    const Vector uh = s.u + Kj * s.eta;
    Pih.row(k) << -(delta_v(s.eta_next) - delta_v(s.eta)),
        2.0 * bilinear_row(s.eta, uh, batch.form(), R), delta_v(uh);
    rhs(k) = s.y.dot(batch.Qy() * s.y) + s.eta.dot(KRK * s.eta);
  }
  const Blocks b = batch.unpack(LeastSquares(Pih, batch.tol_rank()).solve(rhs));
  PiStep out;
  out.P = sym(b.Pee);
  out.PAB = b.Peu;
  out.PBB = sym(b.Puu);
  return out;
}

}  // namespace detail

struct PiStepOptions {
  PiSolve how = PiSolve::factored;
  long max_sweeps = 200000;
  double rel_tol = 1e-14;
};

inline PiStep pi_step(const RegressorBatch& batch, const Matrix& Kj, const PiStepOptions& opt = {},
                      const Matrix* warm = nullptr) {
  if (Kj.rows() != batch.m() || Kj.cols() != batch.nz())
    throw DimensionError("pi_step: K must be m x n_z");
  PiStep out = opt.how == PiSolve::factored
                   ? detail::pi_step_factored(batch, Kj, warm, opt.max_sweeps, opt.rel_tol)
                   : detail::pi_step_literal(batch, Kj);
  out.K_next = detail::solve_small(batch.R() + out.PBB,
                                   Matrix(out.PAB.transpose() + out.PBB * Kj), "pi_step R + P_BB");
  return out;
}

struct StabilityOptions {
  double tol_stab = 1e-9;
  double tol_det = 1e-12;
  bool subtract_KRK = false;
};

struct StabilityResult {
  Matrix H_full;
  Matrix H_sub;
  Matrix K;
  double max_eig = 0.0;
  double det = 0.0;
  bool is_stable_cert = false;
  bool singular_warning = false;
};

// H = Pbar_ee - (Peu K + K' Peu') + K' Puu K - P for a given gain K.
inline StabilityResult stability_for_gain(const Matrix& Pbar_ee, const Matrix& Peu,
                                          const Matrix& Puu, const Matrix& Pj, const Matrix& K,
                                          Eigen::Index n, const Matrix& R,
                                          const StabilityOptions& opt = {}) {
  if (K.rows() != Puu.rows() || K.cols() != Pj.rows())
    throw DimensionError("stability: K must be m x n_z");
  StabilityResult out;
  out.K = K;
  const Matrix cross = Peu * out.K;
  out.H_full = sym(Pbar_ee - cross - cross.transpose() + out.K.transpose() * Puu * out.K - Pj);
  if (opt.subtract_KRK) out.H_full -= out.K.transpose() * R * out.K;
  out.H_sub = out.H_full.bottomRightCorner(n, n);
  out.max_eig = Eigen::SelfAdjointEigenSolver<Matrix>(sym(out.H_sub)).eigenvalues().maxCoeff();
  out.det = out.H_sub.determinant();
  const double scale = std::pow(std::max(1e-300, out.H_sub.norm()), static_cast<double>(n));
  out.singular_warning = std::abs(out.det) < opt.tol_det * scale;
  out.is_stable_cert = out.max_eig < -opt.tol_stab;
  return out;
}

// Same, with the greedy gain K = Puu^{-1} Peu'.
inline StabilityResult stability_from_blocks(const Matrix& Pbar_ee, const Matrix& Peu,
                                             const Matrix& Puu, const Matrix& Pj, Eigen::Index n,
                                             const Matrix& R, const StabilityOptions& opt = {}) {
  const Matrix K = detail::solve_small(Puu, Matrix(Peu.transpose()), "stability P_uu");
  return stability_for_gain(Pbar_ee, Peu, Puu, Pj, K, n, R, opt);
}

inline StabilityResult stability_criterion(const RegressorBatch& batch, const Matrix& Pj,
                                           Eigen::Index n, const StabilityOptions& opt = {}) {
  const Blocks b = batch.unpack(batch.solve_value(Pj, Utility::input_only));
  return stability_from_blocks(sym(b.Pee), b.Peu, sym(b.Puu), sym(Pj), n, batch.R(), opt);
}

inline StabilityResult stability_criterion(const RegressorBatch& batch, const Matrix& Pj,
                                           const Matrix& Kj, Eigen::Index n,
                                           const StabilityOptions& opt = {}) {
  const Blocks b = batch.unpack(batch.solve_value(Pj, Utility::input_only));
  return stability_for_gain(sym(b.Pee), b.Peu, sym(b.Puu), sym(Pj), Kj, n, batch.R(), opt);
}

struct TraceRecord {
  long iteration = 0;
  Mode mode = Mode::VI;
  double dP_norm = 0.0;
  std::optional<double> gain_err;
  double stab_max_eig = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
};

struct IterationTrace {
  std::vector<TraceRecord> records;
  std::optional<long> switch_iteration;

  void write_csv(std::ostream& os, bool with_timing = false) const {
    os << "iteration,mode,dP_norm,gain_err,stab_max_eig,wall_ms\n";
    os << std::setprecision(12);
    for (const auto& r : records) {
      os << r.iteration << ',' << to_string(r.mode) << ',' << r.dP_norm << ',';
      if (r.gain_err) os << *r.gain_err;
      os << ',';
      if (std::isfinite(r.stab_max_eig)) os << r.stab_max_eig;
      os << ',' << (with_timing ? r.wall_ms : 0.0) << '\n';
    }
  }
};

struct LearnerState {
  Matrix Pj;
  Matrix Kj;
  long iteration = 0;
  Mode mode = Mode::VI;
  IterationTrace history;
  bool converged = false;
};

class LearningNonConvergence : public NonConvergenceError {
 public:
  LearningNonConvergence(const std::string& what, LearnerState state)
      : NonConvergenceError(what, state.iteration), state_(std::move(state)) {}

  const LearnerState& state() const noexcept { return state_; }
  const IterationTrace& trace() const noexcept { return state_.history; }

 private:
  LearnerState state_;
};

class CertificationTimeout : public LearningNonConvergence {
 public:
  using LearningNonConvergence::LearningNonConvergence;
};

struct LearnOptions {
  double eps = 1e-3;
  long max_iters = 10000;
  StopNorm norm = StopNorm::spectral;
  std::optional<Matrix> K_ref;
  Eigen::Index n = 0;  // plant order; enables the stability trace column when > 0
  StabilityOptions stab;
  double blow_up = kValueBlowUp;
  PiStepOptions pi;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

inline std::optional<double> gain_error(const LearnOptions& opt, const Matrix& K) {
  if (!opt.K_ref) return std::nullopt;
  return (K - *opt.K_ref).cwiseAbs().maxCoeff();
}

inline void pi_loop(const RegressorBatch& batch, Matrix K, const LearnOptions& opt,
                    LearnerState& st, long budget) {
  st.mode = Mode::PI;
  Matrix Pprev;
  for (long j = 0; j < budget; ++j) {
    const auto t0 = Clock::now();
    const PiStep step = pi_step(batch, K, opt.pi, j == 0 ? nullptr : &Pprev);
    const double pn = stop_norm(step.P, opt.norm);
    if (!(pn <= opt.blow_up)) throw DivergenceError("policy evaluation blew up", st.iteration);
    TraceRecord rec;
    rec.iteration = st.iteration;
    rec.mode = Mode::PI;
    rec.dP_norm = j == 0 ? std::numeric_limits<double>::quiet_NaN()
                         : stop_norm(step.P - Pprev, opt.norm);
    rec.gain_err = gain_error(opt, step.K_next);
    if (opt.n > 0) rec.stab_max_eig = stability_criterion(batch, step.P, opt.n, opt.stab).max_eig;
    rec.wall_ms = elapsed_ms(t0);
    st.history.records.push_back(rec);
    ++st.iteration;
    st.Pj = step.P;
    st.Kj = step.K_next;
    if (j >= 1 && rec.dP_norm < opt.eps) {
      st.converged = true;
      return;
    }
    Pprev = step.P;
    K = step.K_next;
  }
  throw LearningNonConvergence("policy iteration did not converge", st);
}

}  // namespace detail

inline LearnerState run_vi(const RegressorBatch& batch, const Matrix& P0, const LearnOptions& opt) {
  if (P0.rows() != batch.nz() || P0.cols() != batch.nz())
    throw DimensionError("run_vi: P0 must be n_z x n_z");
  LearnerState st;
  st.mode = Mode::VI;
  st.Pj = sym(P0);
  for (long j = 0; j < opt.max_iters; ++j) {
    const auto t0 = detail::Clock::now();
    const ViStep step = vi_step(batch, st.Pj);
    TraceRecord rec;
    rec.iteration = j;
    rec.mode = Mode::VI;
    rec.dP_norm = stop_norm(step.P_next - st.Pj, opt.norm);
    rec.gain_err = detail::gain_error(opt, step.K);
    if (opt.n > 0) rec.stab_max_eig = stability_criterion(batch, st.Pj, opt.n, opt.stab).max_eig;
    rec.wall_ms = detail::elapsed_ms(t0);
    st.history.records.push_back(rec);
    st.iteration = j + 1;
    st.Pj = step.P_next;
    st.Kj = step.K;
    if (!(stop_norm(st.Pj, opt.norm) <= opt.blow_up))
      throw DivergenceError("value iteration blew up", j);
    if (rec.dP_norm < opt.eps) {
      st.converged = true;
      return st;
    }
  }
  throw LearningNonConvergence("value iteration did not converge", st);
}

inline LearnerState run_pi(const RegressorBatch& batch, const Matrix& K0, const LearnOptions& opt) {
  LearnerState st;
  detail::pi_loop(batch, K0, opt, st, opt.max_iters);
  return st;
}

// VI on the augmented utility until the data-based certificate fires, then PI
// on the original utility from the certified gain.
inline LearnerState run_si(const RegressorBatch& batch, const Matrix& P0, Eigen::Index n,
                           const LearnOptions& opt) {
  if (n < 1) throw DimensionError("run_si: plant order must be positive");
  if (P0.rows() != batch.nz() || P0.cols() != batch.nz())
    throw DimensionError("run_si: P0 must be n_z x n_z");
  LearnerState st;
  st.mode = Mode::VI;
  st.Pj = sym(P0);
  for (long j = 0; j < opt.max_iters; ++j) {
    const auto t0 = detail::Clock::now();
    const StabilityResult cert = stability_criterion(batch, st.Pj, n, opt.stab);
    if (cert.is_stable_cert) {
      st.history.switch_iteration = st.iteration;
      detail::pi_loop(batch, cert.K, opt, st, opt.max_iters - j);
      return st;
    }
    const ViStep step = vi_step(batch, st.Pj, Utility::augmented);
    TraceRecord rec;
    rec.iteration = j;
    rec.mode = Mode::VI;
    rec.dP_norm = stop_norm(step.P_next - st.Pj, opt.norm);
    rec.gain_err = detail::gain_error(opt, step.K);
    rec.stab_max_eig = cert.max_eig;
    rec.wall_ms = detail::elapsed_ms(t0);
    st.history.records.push_back(rec);
    st.iteration = j + 1;
    st.Pj = step.P_next;
    st.Kj = step.K;
    if (!(stop_norm(st.Pj, opt.norm) <= opt.blow_up))
      throw DivergenceError("value iteration blew up", j);
  }
  throw CertificationTimeout("stability certificate never fired", st);
}

}  // namespace ofb
