#pragma once

#include <string>

#include "ofb/harness/config.hpp"

namespace ofb::harness {

// Second-order plant with a marginal eigenvalue, single output.
inline ExperimentConfig sim1_config(Algorithm alg = Algorithm::vi) {
  ExperimentConfig c;
  c.name = "sim1";
  c.A.resize(2, 2);
  c.A << 1.0, 0.5,
         0.0, 0.6;
  c.B.resize(2, 1);
  c.B << 1.0, 0.0;
  c.C.resize(1, 2);
  c.C << 1.0, 1.0;
  c.Qy = Matrix::Identity(1, 1);
  c.R = Matrix::Identity(1, 1);
  c.Q_eps = 0.01 * Matrix::Identity(6, 6);
  c.observer_poles = {0.6, 0.95};
  c.eta0.resize(6);
  c.eta0 << 0, 0, 0, 0, 5, -5;
  c.x0.resize(2);
  c.x0 << 0, 10;
  c.algorithm = alg;
  c.P0 = Matrix::Identity(6, 6);
  c.eps_stop = 1e-3;
  c.horizon = 200;
  if (alg == Algorithm::pi) {
    // Static state feedback 0.5 * [1, 1] expressed through the internal state.
    c.K0 = Matrix(1, 6);
    *c.K0 << -0.3, 0.5, -0.015, 0.025, 0.342948717948718, -0.657051282051282;
  }
  return c;
}

// Third-order aircraft pitch model, single output.
inline ExperimentConfig sim2_config(Algorithm alg = Algorithm::pi) {
  ExperimentConfig c;
  c.name = "sim2";
  c.A.resize(3, 3);
  c.A << 0.906488, 0.0816012, -0.0005,
         0.0741349, 0.90121, -0.0007083,
         0.0, 0.0, 0.132655;
  c.B.resize(3, 1);
  c.B << -0.00150808, -0.0096, 0.867345;
  c.C.resize(1, 3);
  c.C << 1.0, 0.0, 0.0;
  c.Qy = 100.0 * Matrix::Identity(1, 1);
  c.R = Matrix::Identity(1, 1);
  c.Q_eps = 0.01 * Matrix::Identity(9, 9);
  c.observer_poles = {-0.91, -0.92, -0.93};
  c.A_eps = Matrix(3, 3);
  *c.A_eps << -0.91, 1.1, -1.2,
              0.0, -0.92, 1.3,
              0.0, 0.0, -0.93;
  c.eta0 = Vector::Zero(9);
  c.eta0.tail(3) << 2, 1, 1;
  c.x0 = Vector::Constant(3, 0.2);
  c.algorithm = alg;
  c.P0 = 1e5 * Matrix::Identity(9, 9);
  c.eps_stop = 1.0;
  c.horizon = 300;
  if (alg == Algorithm::pi) {
    c.K0 = Matrix::Zero(1, 9);
  } else {
    c.K0 = Matrix(1, 9);
    *c.K0 << 1.1069, 3.3440, -0.1596, 469.8189, -3114.9114, 2609.3162, 399.8526, -382.6236, -418.7970;
  }
  return c;
}

inline ExperimentConfig bundled_config(const std::string& name, Algorithm alg) {
  if (name == "sim1") return sim1_config(alg);
  if (name == "sim2") return sim2_config(alg);
  throw ConfigError("name", "unknown bundled configuration '" + name + "'");
}

}  // namespace ofb::harness
