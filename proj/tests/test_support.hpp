#pragma once

#include <random>
#include <vector>

#include "ofb/harness/bundled.hpp"
#include "ofb/lti.hpp"

namespace ofb::test {

inline LtiSystem system_of(const harness::ExperimentConfig& c) {
  return LtiSystem(c.A, c.B, c.C, c.Qy, c.R);
}

inline LtiSystem sim1_system() { return system_of(harness::sim1_config()); }
inline LtiSystem sim2_system() { return system_of(harness::sim2_config()); }

inline Matrix gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double s = 1.0) {
  std::normal_distribution<double> g(0.0, s);
  return Matrix::NullaryExpr(r, c, [&] { return g(rng); });
}

// Random plant rescaled to spectral radius in [0.3, 1.2]; retried until it is
// stabilizable and observable.
inline LtiSystem random_system(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m, Eigen::Index p) {
  std::uniform_real_distribution<double> rho(0.3, 1.2);
  for (;;) {
    Matrix A = gaussian(rng, n, n);
    const double r = spectral_radius(A);
    if (r < 1e-6) continue;
    A *= rho(rng) / r;
    const Matrix B = gaussian(rng, n, m);
    const Matrix C = gaussian(rng, p, n);
    if (!is_stabilizable(A, B) || !is_observable(A, C)) continue;
    return LtiSystem(A, B, C, Matrix::Identity(p, p), Matrix::Identity(m, m));
  }
}

// Distinct real poles in (-0.9, 0.9), separated by 0.05.
inline std::vector<Complex> random_poles(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  std::vector<Complex> out;
  while (static_cast<Eigen::Index>(out.size()) < n) {
    const double z = u(rng);
    bool ok = true;
    for (const Complex& w : out) ok = ok && std::abs(w.real() - z) > 0.05;
    if (ok) out.emplace_back(z);
  }
  return out;
}

}  // namespace ofb::test
