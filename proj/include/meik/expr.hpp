#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meik/dual.hpp"
#include "meik/errors.hpp"

namespace meik {

enum class NodeKind : std::uint8_t {
  Literal,
  Variable,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  PowInt,   // base ^ syntactic integer literal; defined for any base
  PowReal,  // base ^ syntactic non-integer literal; base must be positive
  PowGen,   // base ^ general expression; base must be positive
  Call,
};

enum class FuncId : std::uint8_t {
  Exp,
  Ln,
  Sin,
  Cos,
  Sinh,
  Cosh,
  Tan,
  Tanh,
  Sqrt,
  Abs,
};

struct AstNode {
  NodeKind kind = NodeKind::Literal;
  FuncId func = FuncId::Exp;    // Call only
  double literal = 0.0;         // Literal value, PowReal exponent
  long long int_exp = 0;        // PowInt exponent
  int var = -1;                 // Variable index
  int a = -1;                   // first child
  int b = -1;                   // second child
};

/// A parsed scalar expression over a fixed, ordered variable list.
/// Immutable after parse; evaluation is pure and thread-safe.
class Expr {
 public:
  /// Parse `source` against the declared variables (order defines gradient
  /// component order). Operator precedence: ^ > unary - > * / > + -,
  /// with ^ right-associative.
  static Expr parse(std::string_view source, std::vector<std::string> vars);

  /// Render back to source. Reparsing the result yields a structurally
  /// identical tree.
  std::string serialize() const;

  /// Value, exact gradient and exact Hessian at `point`.
  Dual2 eval_jet2(std::span<const double> point) const;

  /// Value and exact gradient at `point`.
  Dual1 eval_jet1(std::span<const double> point) const;

  /// Value only.
  double eval_value(std::span<const double> point) const;

  int arity() const { return static_cast<int>(vars_.size()); }
  const std::vector<std::string>& variables() const { return vars_; }

  bool structurally_equal(const Expr& other) const;

  /// Serialization of an arbitrary subtree; used in error messages.
  std::string serialize_node(int node) const;

  const std::vector<AstNode>& nodes() const { return nodes_; }
  int root() const { return root_; }

 private:
  Expr() = default;
  friend class Parser;

  Dual2 jet2(int node, std::span<const double> point) const;
  Dual1 jet1(int node, std::span<const double> point) const;
  double value(int node, std::span<const double> point) const;

  std::vector<std::string> vars_;
  std::vector<AstNode> nodes_;
  int root_ = -1;
};

}  // namespace meik
