#pragma once

#include <functional>
#include <utility>

#include "meik/jet.hpp"
#include "meik/solutions.hpp"

namespace meik {

/// A scalar field of (t, x), possibly branch-tracked.
using ScalarField = std::function<double(double, const Eigen::VectorXd&)>;

/// Per-point verification summary.
struct ResidualReport {
  JetPoint point;
  double residual_closed = 0.0;
  double residual_fd = 0.0;
  double jet_mismatch = 0.0;  // infinity norm, closed-form vs FD jet
  int hessian_rank = 0;
  Eigen::VectorXd singular_values;
};

/// Central-difference first-order jet with step max(1,|coord|)*eps^(1/3).
/// Field errors other than BranchJump surface as EvalFailure.
JetPoint fd_jet(const ScalarField& field, double t, const Eigen::VectorXd& x);

/// PDE residual u_x.u_x - F(u_t) (general families use the full jet).
double residual(const FFamily& F, const JetPoint& jet);

/// Numerical rank of the spatial Hessian: central differences with step
/// max(1,|coord|)*eps^(1/4), singular values thresholded at
/// tol_rel * max(largest, 1).
std::pair<int, Eigen::VectorXd> hessian_rank(const ScalarField& field, double t,
                                             const Eigen::VectorXd& x,
                                             double tol_rel = 1e-6);

/// Evaluation of one envelope sheet of an implicit solution: every call
/// re-solves Newton seeded at the center root and rejects results whose tau
/// drifted further than 10 * (2 dist) * ||J^-1|| from the center, which keeps
/// a whole FD stencil on a single sheet.
class SheetTracker {
 public:
  SheetTracker(const ImplicitSolution& sol, NewtonConfig cfg, double t0,
               Eigen::VectorXd x0, Root center);

  double operator()(double t, const Eigen::VectorXd& x) const;
  Root track(double t, const Eigen::VectorXd& x) const;

  ScalarField field() const {
    return [this](double t, const Eigen::VectorXd& x) { return (*this)(t, x); };
  }

  const Root& center() const { return center_; }

 private:
  const ImplicitSolution* sol_;
  NewtonConfig cfg_;
  double t0_;
  Eigen::VectorXd x0_;
  Root center_;
  double inv_jacobian_norm_ = 0.0;
};

/// Full verification of one converged root: closed-form and FD residuals,
/// jet mismatch, spatial Hessian rank.
ResidualReport verify_root(const ImplicitSolution& sol, const NewtonConfig& cfg,
                           double t, const Eigen::VectorXd& x, const Root& root);

}  // namespace meik
