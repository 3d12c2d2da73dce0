#pragma once

#include <Eigen/Dense>

namespace meik {

/// A point of first-order jet space: (t, x_1..x_n, u, u_t, u_1..u_n).
struct JetPoint {
  double t = 0.0;
  Eigen::VectorXd x;
  double u = 0.0;
  double u_t = 0.0;
  Eigen::VectorXd u_x;

  int n() const { return static_cast<int>(x.size()); }
};

}  // namespace meik
