#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "meik/expr.hpp"

namespace meik {

enum class FamilyKind {
  Exp,        // F(s) = e^s
  Power,      // F(s) = |s|^beta
  Quadratic,  // F(s) = eps2*s^2 + eps1
  CustomUt,   // F(s) given as an expression in u_t, inverse as expression in sigma
  General,    // F(t, u, u_t); symmetry checks only
};

/// Value with first and second derivative of a univariate map.
struct Jet2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// F and its partial derivatives at a jet; for families that depend on u_t
/// only, ft and fu are exactly zero.
struct GeneralJet {
  double f = 0.0;
  double ft = 0.0;
  double fu = 0.0;
  double fut = 0.0;
};

/// Inverse-branch selector. Families here carry at most two branches; an
/// indexed selector canonicalizes as 0 = principal, 1 = negative.
struct BranchSelector {
  enum class Kind { Principal, Negative, Index };
  Kind kind = Kind::Principal;
  int index = 0;

  static BranchSelector principal() { return {Kind::Principal, 0}; }
  static BranchSelector negative() { return {Kind::Negative, 1}; }
  static BranchSelector indexed(int i) { return {Kind::Index, i}; }

  bool is_negative() const {
    return kind == Kind::Negative || (kind == Kind::Index && index == 1);
  }
  std::string name() const { return is_negative() ? "negative" : "principal"; }
};

/// Closed real interval with optionally open endpoints.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_open = true;
  bool hi_open = true;

  bool contains(double v) const {
    if (lo_open ? v <= lo : v < lo) return false;
    if (hi_open ? v >= hi : v > hi) return false;
    return true;
  }
  std::string str() const;
};

/// A resolved inverse branch: the selector plus the sigma interval on which
/// Phi is defined, computed once at construction.
struct InverseBranch {
  BranchSelector selector;
  Interval domain;
};

/// One of the F families of the classification, with derivatives and
/// branch-resolved inverse Phi (F(Phi(sigma)) = sigma on the branch domain).
/// Immutable after construction; all evaluation is pure.
class FFamily {
 public:
  FFamily() = default;  // defaults to the exponential family

  static FFamily exponential();
  static FFamily power(double beta);
  static FFamily quadratic(int eps1, int eps2);
  static FFamily custom_ut(const std::string& f_source,
                           const std::optional<std::string>& inverse_source);
  static FFamily general(const std::string& source);

  FamilyKind kind() const { return kind_; }
  bool is_general() const { return kind_ == FamilyKind::General; }
  double beta() const { return beta_; }
  int eps1() const { return eps1_; }
  int eps2() const { return eps2_; }

  int table_row() const { return table_row_; }
  void set_table_row(int row) { table_row_ = row; }

  /// F(s) and F'(s). Not available for the General kind.
  std::pair<double, double> f_eval(double s) const;

  /// F and its partials at (t, u, u_t); works for every kind.
  GeneralJet general_eval(double t, double u, double ut) const;

  /// Available branch selectors for this family.
  std::vector<BranchSelector> branches() const;

  /// Resolve a branch, computing its sigma domain. Throws DomainError for a
  /// branch the family does not have, NoInverse for CustomUt without inverse.
  InverseBranch branch(BranchSelector sel) const;

  /// Phi(sigma) and Phi'(sigma) on the given branch.
  std::pair<double, double> phi_eval(const InverseBranch& br, double sigma) const;

  /// Phi with first and second derivative; the Newton Jacobian needs Phi''.
  Jet2 phi_jet2(const InverseBranch& br, double sigma) const;

  nlohmann::json to_json() const;
  static FFamily from_json(const nlohmann::json& j);

  std::string describe() const;

 private:
  void check_invertible() const;

  FamilyKind kind_ = FamilyKind::Exp;
  double beta_ = 0.0;
  int eps1_ = 1;
  int eps2_ = 1;
  int table_row_ = -1;
  // Shared so FFamily stays cheap to copy into solutions and samplers.
  std::shared_ptr<const Expr> f_expr_;
  std::shared_ptr<const Expr> inverse_expr_;
  std::string f_source_;
  std::string inverse_source_;
};

/// Psi(tau_1..tau_k), the arbitrary smooth function of the implicit solution.
class PsiFunction {
 public:
  PsiFunction(const std::string& source, int arity);

  int arity() const { return arity_; }
  Dual2 jet2(std::span<const double> tau) const { return expr_->eval_jet2(tau); }
  double value(std::span<const double> tau) const { return expr_->eval_value(tau); }
  const Expr& expr() const { return *expr_; }

  static std::vector<std::string> tau_names(int k);

 private:
  std::shared_ptr<const Expr> expr_;
  int arity_ = 0;
};

/// The w_m(tau_1..tau_k) functions multiplying the trailing coordinates of a
/// rank-k solution; empty when k = n.
class WFunctions {
 public:
  WFunctions() = default;
  WFunctions(const std::vector<std::string>& sources, int arity);

  int count() const { return static_cast<int>(exprs_.size()); }
  int arity() const { return arity_; }
  Dual2 jet2(int m, std::span<const double> tau) const { return exprs_[m]->eval_jet2(tau); }
  double value(int m, std::span<const double> tau) const { return exprs_[m]->eval_value(tau); }

 private:
  std::vector<std::shared_ptr<const Expr>> exprs_;
  int arity_ = 0;
};

}  // namespace meik
