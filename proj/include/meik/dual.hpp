#pragma once

#include <Eigen/Dense>

namespace meik {

/// Second-order forward-mode scalar: value, gradient and Hessian with respect
/// to a fixed set of variables, carried exactly through every operation.
///
/// The Hessian is assembled from symmetric rank-one updates, so opposite
/// entries are bit-for-bit equal.
struct Dual2 {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;

  Dual2() = default;
  Dual2(double v, Eigen::VectorXd g, Eigen::MatrixXd h)
      : value(v), grad(std::move(g)), hess(std::move(h)) {}

  static Dual2 constant(double v, int dim) {
    return {v, Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim)};
  }

  static Dual2 variable(double v, int dim, int index) {
    Dual2 d = constant(v, dim);
    d.grad(index) = 1.0;
    return d;
  }

  int dim() const { return static_cast<int>(grad.size()); }

  Dual2 operator-() const { return {-value, -grad, -hess}; }

  friend Dual2 operator+(const Dual2& a, const Dual2& b) {
    return {a.value + b.value, a.grad + b.grad, a.hess + b.hess};
  }

  friend Dual2 operator-(const Dual2& a, const Dual2& b) {
    return {a.value - b.value, a.grad - b.grad, a.hess - b.hess};
  }

  friend Dual2 operator*(const Dual2& a, const Dual2& b) {
    Eigen::MatrixXd h = a.value * b.hess + b.value * a.hess;
    h.noalias() += a.grad * b.grad.transpose();
    h.noalias() += b.grad * a.grad.transpose();
    return {a.value * b.value, a.value * b.grad + b.value * a.grad, std::move(h)};
  }

  // w = a/b; gradient and Hessian follow from a = w*b.
  friend Dual2 operator/(const Dual2& a, const Dual2& b) {
    const double w = a.value / b.value;
    Eigen::VectorXd g = (a.grad - w * b.grad) / b.value;
    Eigen::MatrixXd h = a.hess - w * b.hess;
    h.noalias() -= g * b.grad.transpose();
    h.noalias() -= b.grad * g.transpose();
    h /= b.value;
    return {w, std::move(g), std::move(h)};
  }

  /// Chain rule for a smooth univariate map: f(a), given f, f' and f'' at a.value.
  static Dual2 chain(const Dual2& a, double f0, double f1, double f2) {
    Eigen::MatrixXd h = f1 * a.hess;
    if (f2 != 0.0) h.noalias() += f2 * (a.grad * a.grad.transpose());
    return {f0, f1 * a.grad, std::move(h)};
  }
};

/// First-order companion used where Hessians are not needed.
struct Dual1 {
  double value = 0.0;
  Eigen::VectorXd grad;

  static Dual1 constant(double v, int dim) {
    return {v, Eigen::VectorXd::Zero(dim)};
  }
  static Dual1 variable(double v, int dim, int index) {
    Dual1 d = constant(v, dim);
    d.grad(index) = 1.0;
    return d;
  }

  Dual1 operator-() const { return {-value, -grad}; }
  friend Dual1 operator+(const Dual1& a, const Dual1& b) {
    return {a.value + b.value, a.grad + b.grad};
  }
  friend Dual1 operator-(const Dual1& a, const Dual1& b) {
    return {a.value - b.value, a.grad - b.grad};
  }
  friend Dual1 operator*(const Dual1& a, const Dual1& b) {
    return {a.value * b.value, a.value * b.grad + b.value * a.grad};
  }
  friend Dual1 operator/(const Dual1& a, const Dual1& b) {
    const double w = a.value / b.value;
    return {w, (a.grad - w * b.grad) / b.value};
  }
  static Dual1 chain(const Dual1& a, double f0, double f1) {
    return {f0, f1 * a.grad};
  }
};

}  // namespace meik
