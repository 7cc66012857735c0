#pragma once

#include <Eigen/Dense>

// Published figures for the two bundled examples, as printed (4 decimals).
namespace ofb::reference {

inline Eigen::MatrixXd sim1_M_printed() {
  Eigen::MatrixXd M(2, 6);
  // clang-format off
  M << -0.6, 1.0, -0.03, 0.05, -0.2885, -0.2885,
        0.0, 0.0,  0.0,  0.0,   0.9744, -1.0256;
  // clang-format on
  return M;
}

inline Eigen::RowVectorXd sim1_K_star_printed() {
  Eigen::RowVectorXd K(6);
  K << -0.3708, 0.6180, -0.0185, 0.0309, 0.5020, -0.8944;
  return K;
}

inline constexpr double kSim1PStarNorm = 6.1046;
inline constexpr long kSim1ViIterations = 83;
inline constexpr long kSim1KN = 29;

inline Eigen::MatrixXd sim2_M_printed() {
  Eigen::MatrixXd M(3, 9);
  // clang-format off
  M << 0.0003, 0.0003, -0.0015,      0.8862,    1.4884,    4.7004,   0.2505,   -0.4134,     0.1123,
       0.0391, 0.1145, -0.0096,     14.1018, -105.7656,   99.6818,  14.1130,  -14.2814,   -13.7445,
       2.0276, 7.8964,  0.8673,   2896.8322, -6457.8672, 3572.4259, 858.3455, -505.9328, -1210.5582;
  // clang-format on
  return M;
}

inline Eigen::RowVectorXd sim2_K_star_printed() {
  Eigen::RowVectorXd K(9);
  K << -0.1029, -0.2900, 0.0377, -30.0765, 264.5137, -286.4590, -37.1673, 39.9946, 32.9448;
  return K;
}

inline constexpr double kSim2PStarNorm = 4.2444e6;
inline constexpr double kPrintedHalfUlp = 5e-5;

inline Eigen::RowVectorXd sim2_companion_last_row() {
  Eigen::RowVectorXd r(3);
  r << -0.7786, -2.5391, -2.7600;
  return r;
}

}  // namespace ofb::reference
