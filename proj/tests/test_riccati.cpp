#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ofb/riccati.hpp"
#include "test_support.hpp"

namespace ofb {
namespace {

LtiSystem scalar_system(double a) {
  Matrix A(1, 1);
  A << a;
  return LtiSystem(A, Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1));
}

TEST(Dlyap, ZeroDynamics) {
  Matrix Q(2, 2);
  Q << 2, 1, 1, 3;
  EXPECT_LT((dlyap(Matrix::Zero(2, 2), Q) - Q).norm(), 1e-14);
}

TEST(Dlyap, Scalar) {
  Matrix F(1, 1), Q(1, 1);
  F << 0.5;
  Q << 3.0;
  EXPECT_NEAR(dlyap(F, Q)(0, 0), 4.0, 1e-13);
}

TEST(Dlyap, RandomStableResidual) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    Matrix F = test::gaussian(rng, 5, 5);
    F *= 0.9 / spectral_radius(F);
    const Matrix G = test::gaussian(rng, 5, 5);
    const Matrix Q = G * G.transpose();
    const Matrix P = dlyap(F, Q);
    EXPECT_LT((F.transpose() * P * F - P + Q).norm(), 1e-9 * P.norm());
  }
}

TEST(Dlyap, RejectsUnstable) {
  EXPECT_THROW(dlyap(Matrix::Identity(2, 2), Matrix::Identity(2, 2)), InstabilityError);
}

TEST(AreVi, ZeroDynamicsCollapses) {
  const LtiSystem sys(Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                      Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const AreSolution s = are_vi(sys, std::nullopt, 1e-12);
  EXPECT_LT((s.P - sys.Qx()).norm(), 1e-14);
  EXPECT_LT(s.K.norm(), 1e-14);
  // one step reaches Qx, a second confirms the fixed point
  EXPECT_LE(s.iterations, 2);
}

TEST(AreVi, ScalarClosedForm) {
  const AreSolution s = are_vi(scalar_system(0.5), std::nullopt, 1e-13);
  // P^2 - 0.25 P - 1 = 0
  const double P = (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0;
  EXPECT_NEAR(s.P(0, 0), P, 1e-10);
  EXPECT_NEAR(s.P(0, 0), 1.13278, 1e-5);
  EXPECT_NEAR(s.K(0, 0), 0.5 * P / (1.0 + P), 1e-10);
  EXPECT_NEAR(s.K(0, 0), 0.26557, 1e-5);
}

TEST(AreVi, Sim1Invariants) {
  const LtiSystem sys = test::sim1_system();
  const AreSolution s = are_vi(sys, Matrix::Identity(2, 2), 1e-12);
  EXPECT_LT(s.residual, 1e-9);
  EXPECT_LT((s.K - optimal_gain(sys, s.P)).norm(), 1e-12);
  EXPECT_TRUE(is_schur(sys.A() - sys.B() * s.K));
}

TEST(ArePi, OptimalStartIsFixedPoint) {
  const LtiSystem sys = test::sim1_system();
  const AreSolution ref = are_vi(sys, std::nullopt, 1e-13);
  const AreSolution s = are_pi(sys, ref.K, 1e-9);
  EXPECT_LT((s.P - ref.P).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(s.iterations, 2);
}

TEST(ArePi, RejectsDestabilizingStart) {
  const LtiSystem sys = test::sim1_system();
  EXPECT_THROW(are_pi(sys, Matrix::Zero(1, 2), 1e-9), InadmissiblePolicyError);
}

TEST(ArePi, Sim2FromOpenLoop) {
  const LtiSystem sys = test::sim2_system();
  const AreSolution s = are_pi(sys, Matrix::Zero(1, 3), 1e-6);
  EXPECT_LT(s.residual / s.P.norm(), 1e-9);
  EXPECT_TRUE(is_schur(sys.A() - sys.B() * s.K));
}

TEST(ArePi, AgreesWithViOnRandomSystems) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const LtiSystem sys = test::random_system(rng, 4, 1 + t % 2, 1 + (t / 2) % 2);
    const AreSolution vi = are_vi(sys, std::nullopt, 1e-12);
    const AreSolution pi = are_pi(sys, vi.K, 1e-12);
    EXPECT_LT((vi.P - pi.P).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, pi.P.norm())) << "trial " << t;
  }
}

double simulated_cost(const LtiSystem& sys, const Matrix& K, const Matrix& L, const Vector& x0,
                      const Vector& eps0) {
  Vector x = x0, xhat = x0 - eps0;
  double J = 0.0;
  for (long k = 0; k < 100000; ++k) {
    const Vector y = sys.C() * x;
    const Vector u = -K * xhat;
    const double stage = y.dot(sys.Qy() * y) + u.dot(sys.R() * u);
    J += stage;
    if (k > 10 && stage < 1e-12 * std::max(1e-300, J) && (x - xhat).norm() < 1e-9 * (1 + x0.norm())) break;
    xhat = luenberger_step(sys, L, xhat, u, y);
    x = sys.A() * x + sys.B() * u;
  }
  return J;
}

TEST(CompareValueFunctions, ZeroObserverErrorIsEqual) {
  const LtiSystem sys = test::sim1_system();
  const Matrix L = place_observer_poles(sys, {0.6, 0.95});
  const auto v = compare_value_functions(sys, L, (Vector(2) << 0, 10).finished(), Vector::Zero(2));
  EXPECT_EQ(v.V_observer, v.V_state);
}

TEST(CompareValueFunctions, Sim1MatchesSimulatedCosts) {
  const LtiSystem sys = test::sim1_system();
  const Matrix L = place_observer_poles(sys, {0.6, 0.95});
  const Vector x0 = (Vector(2) << 0, 10).finished();
  const auto v = compare_value_functions(sys, L, x0, x0);
  EXPECT_GT(v.V_observer, v.V_state);
  const Matrix K = are_reference(sys).K;
  EXPECT_NEAR(simulated_cost(sys, K, L, x0, Vector::Zero(2)) / v.V_state, 1.0, 5e-3);
  EXPECT_NEAR(simulated_cost(sys, K, L, x0, x0) / v.V_observer, 1.0, 5e-3);
}

TEST(CompareValueFunctions, InequalityOnRandomSystems) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const LtiSystem sys = test::random_system(rng, 3, 1, 1);
    const Matrix L = place_observer_poles(sys, test::random_poles(rng, 3));
    const Vector x0 = test::gaussian(rng, 3, 1), e0 = test::gaussian(rng, 3, 1);
    const auto v = compare_value_functions(sys, L, x0, e0);
    EXPECT_GT(v.V_observer, v.V_state) << "trial " << t;
  }
}

}  // namespace
}  // namespace ofb
