#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "meik/funcs.hpp"
#include "meik/jet.hpp"

namespace meik {

/// Rank-0 solution u = c0*t + c.x + c_const with c.c = F(c0).
struct LinearSolution {
  double c0 = 0.0;
  Eigen::VectorXd c;
  double c_const = 0.0;

  double eval(double t, const Eigen::VectorXd& x) const {
    return c0 * t + c.dot(x) + c_const;
  }
  JetPoint jet(double t, const Eigen::VectorXd& x) const {
    return {t, x, eval(t, x), c0, c};
  }
};

/// Builds the rank-0 solution for a unit direction; throws NegativeF when
/// F(c0) < 0.
LinearSolution linear_solution(const FFamily& F, double c0,
                               const Eigen::VectorXd& direction, double c_const);

struct NewtonConfig {
  double tol = 1e-12;                 // residual infinity-norm threshold
  int max_iter = 50;
  double backtrack_factor = 0.5;
  int max_halvings = 30;
  std::vector<Eigen::VectorXd> seeds;  // user-supplied tau starts
  double jacobian_cond_max = 1e12;
  std::uint64_t rng_seed = 0;
  bool use_default_seeds = true;       // t=0 seed, contractions, x-slice, random
  int random_seeds = 8;
};

/// One converged stationarity root and the solution value it defines.
struct Root {
  Eigen::VectorXd tau;
  double u = 0.0;
  double sigma = 0.0;
  int iterations = 0;
  bool converged = false;
  double jacobian_cond = 0.0;
};

struct EvalResult {
  std::vector<Root> roots;  // converged, deduplicated, sorted by u ascending
  int seeds_tried = 0;
  int seeds_no_converge = 0;
  int seeds_domain_error = 0;
  int seeds_singular = 0;
};

/// Residual, Jacobian and sigma of the stationarity system at tau.
struct Stationarity {
  Eigen::VectorXd G;
  Eigen::MatrixXd J;
  double sigma = 0.0;
};

/// Implicit rank-k general solution
///   u = -x_b tau_b + t Phi(sigma) + w_m x_{k+m} + Psi(tau),
///   sigma = tau.tau + w.w,
/// with tau eliminated through the stationarity conditions G = 0.
class ImplicitSolution {
 public:
  ImplicitSolution(int n, int k, FFamily F, BranchSelector branch,
                   PsiFunction psi, WFunctions w);

  int n() const { return n_; }
  int k() const { return k_; }
  const FFamily& family() const { return family_; }
  const InverseBranch& branch() const { return branch_; }

  double sigma_of(const Eigen::VectorXd& tau) const;

  /// G_b = x_b - t Phi'(sigma) dsigma/dtau_b - w_{m,tau_b} x_{k+m} - Psi_{tau_b},
  /// J its exact tau-Jacobian. Phi is only consulted when t != 0.
  Stationarity stationarity(double t, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& tau) const;

  /// Damped multistart Newton over the seed set; returns all distinct
  /// converged roots sorted by u. Throws NoRoot / SingularJacobian /
  /// DomainError when nothing converged.
  EvalResult evaluate(double t, const Eigen::VectorXd& x,
                      const NewtonConfig& cfg) const;

  /// Closed-form first-order jet on a converged root:
  /// u_b = -tau_b (b <= k), u_{k+m} = w_m(tau), u_t = Phi(sigma).
  JetPoint jet_closed_form(double t, const Eigen::VectorXd& x, const Root& root) const;

  /// Solution value at a given tau (no stationarity enforced).
  double u_of(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& tau) const;

  enum class SeedFail { None, NoConverge, Domain, Singular };

  /// Newton from one seed; nullopt plus reason on failure.
  std::optional<Root> newton_from(double t, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& seed,
                                  const NewtonConfig& cfg, SeedFail* why) const;

  /// Seed list actually used by evaluate() for this point (deterministic).
  std::vector<Eigen::VectorXd> seed_set(double t, const Eigen::VectorXd& x,
                                        const NewtonConfig& cfg) const;

 private:
  int n_ = 0;
  int k_ = 0;
  FFamily family_;
  InverseBranch branch_;
  PsiFunction psi_;
  WFunctions w_;
};

}  // namespace meik
