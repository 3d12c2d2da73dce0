#include "meik/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <unordered_set>

namespace meik {

std::string ParseError::format(const std::string& msg, std::size_t offset,
                               const std::vector<std::string>& expected) {
  std::ostringstream out;
  out << msg << " at offset " << offset;
  if (!expected.empty()) {
    out << " (expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) out << ", ";
      out << expected[i];
    }
    out << ")";
  }
  return out.str();
}

namespace {

enum class Tok : std::uint8_t {
  Number,
  Ident,
  Plus,
  Minus,
  Star,
  Slash,
  Caret,
  LParen,
  RParen,
  Comma,
  End,
};

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (digit(c) || (c == '.' && i + 1 < src.size() && digit(src[i + 1]))) {
      while (i < src.size() && digit(src[i])) ++i;
      if (i < src.size() && src[i] == '.') {
        ++i;
        while (i < src.size() && digit(src[i])) ++i;
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && digit(src[j])) {
          i = j;
          while (i < src.size() && digit(src[i])) ++i;
        }
      }
      Token t{Tok::Number, start, src.substr(start, i - start)};
      auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (res.ec != std::errc{}) {
        throw ParseError("invalid numeric literal '" + std::string(t.text) + "'", start, {"number"});
      }
      out.push_back(t);
      continue;
    }
    if (ident_start(c)) {
      while (i < src.size() && ident_char(src[i])) ++i;
      out.push_back({Tok::Ident, start, src.substr(start, i - start)});
      continue;
    }
    Tok k;
    switch (c) {
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '*': k = Tok::Star; break;
      case '/': k = Tok::Slash; break;
      case '^': k = Tok::Caret; break;
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case ',': k = Tok::Comma; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", start, {});
    }
    out.push_back({k, start, src.substr(start, 1)});
    ++i;
  }
  out.push_back({Tok::End, src.size(), {}});
  return out;
}

struct FuncEntry {
  std::string_view name;
  FuncId id;
};

constexpr std::array<FuncEntry, 10> kFunctions = {{
    {"exp", FuncId::Exp},
    {"ln", FuncId::Ln},
    {"sin", FuncId::Sin},
    {"cos", FuncId::Cos},
    {"sinh", FuncId::Sinh},
    {"cosh", FuncId::Cosh},
    {"tan", FuncId::Tan},
    {"tanh", FuncId::Tanh},
    {"sqrt", FuncId::Sqrt},
    {"abs", FuncId::Abs},
}};

std::string_view func_name(FuncId id) {
  for (const auto& f : kFunctions)
    if (f.id == id) return f.name;
  return "?";
}

constexpr long long kMaxIntExp = 1LL << 40;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

class Parser {
 public:
  Parser(std::string_view src, std::vector<std::string> vars)
      : tokens_(tokenize(src)) {
    expr_.vars_ = std::move(vars);
  }

  Expr run() {
    if (tokens_.size() == 1) {
      throw ParseError("empty expression", 0, {"expression"});
    }
    expr_.root_ = parse_expr();
    expect(Tok::End, "end of input");
    return std::move(expr_);
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  Token advance() { return tokens_[pos_++]; }

  void expect(Tok k, const std::string& what) {
    if (peek().kind != k) {
      throw ParseError("unexpected token '" + describe(peek()) + "'", peek().offset, {what});
    }
    ++pos_;
  }

  static std::string describe(const Token& t) {
    if (t.kind == Tok::End) return "<end>";
    return std::string(t.text);
  }

  int add_node(AstNode n) {
    expr_.nodes_.push_back(n);
    return static_cast<int>(expr_.nodes_.size() - 1);
  }

  int parse_expr() {
    int lhs = parse_term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const Tok op = advance().kind;
      int rhs = parse_term();
      AstNode n;
      n.kind = op == Tok::Plus ? NodeKind::Add : NodeKind::Sub;
      n.a = lhs;
      n.b = rhs;
      lhs = add_node(n);
    }
    return lhs;
  }

  int parse_term() {
    int lhs = parse_factor();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const Tok op = advance().kind;
      int rhs = parse_factor();
      AstNode n;
      n.kind = op == Tok::Star ? NodeKind::Mul : NodeKind::Div;
      n.a = lhs;
      n.b = rhs;
      lhs = add_node(n);
    }
    return lhs;
  }

  int parse_factor() {
    if (peek().kind == Tok::Minus) {
      advance();
      int child = parse_factor();
      AstNode n;
      n.kind = NodeKind::Neg;
      n.a = child;
      return add_node(n);
    }
    return parse_power();
  }

  int parse_power() {
    int base = parse_atom();
    if (peek().kind == Tok::Caret) {
      advance();
      int exponent = parse_factor();  // right-associative; allows 2^-3
      return make_pow(base, exponent);
    }
    return base;
  }

  // Integer exponents are recognized syntactically (literal, possibly under a
  // single unary minus) so that negative bases stay legal for them.
  int make_pow(int base, int exponent) {
    const AstNode& e = expr_.nodes_[exponent];
    double lit = 0.0;
    bool is_literal = false;
    if (e.kind == NodeKind::Literal) {
      lit = e.literal;
      is_literal = true;
    } else if (e.kind == NodeKind::Neg &&
               expr_.nodes_[e.a].kind == NodeKind::Literal) {
      lit = -expr_.nodes_[e.a].literal;
      is_literal = true;
    }
    AstNode n;
    n.a = base;
    if (is_literal) {
      if (std::floor(lit) == lit && std::abs(lit) <= static_cast<double>(kMaxIntExp)) {
        n.kind = NodeKind::PowInt;
        n.int_exp = static_cast<long long>(lit);
      } else {
        n.kind = NodeKind::PowReal;
        n.literal = lit;
      }
    } else {
      n.kind = NodeKind::PowGen;
      n.b = exponent;
    }
    return add_node(n);
  }

  int parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        advance();
        AstNode n;
        n.kind = NodeKind::Literal;
        n.literal = t.number;
        return add_node(n);
      }
      case Tok::LParen: {
        advance();
        int inner = parse_expr();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Ident: {
        advance();
        if (peek().kind == Tok::LParen) {
          return parse_call(t);
        }
        const auto& vars = expr_.vars_;
        auto it = std::find(vars.begin(), vars.end(), std::string(t.text));
        if (it == vars.end()) {
          throw UnknownVariable(std::string(t.text), t.offset);
        }
        AstNode n;
        n.kind = NodeKind::Variable;
        n.var = static_cast<int>(it - vars.begin());
        return add_node(n);
      }
      default:
        throw ParseError("unexpected token '" + describe(t) + "'", t.offset,
                         {"number", "identifier", "'('", "'-'"});
    }
  }

  int parse_call(const Token& name) {
    expect(Tok::LParen, "'('");
    std::vector<int> args;
    args.push_back(parse_expr());
    while (peek().kind == Tok::Comma) {
      advance();
      args.push_back(parse_expr());
    }
    expect(Tok::RParen, "')'");

    if (name.text == "pow") {
      if (args.size() != 2) {
        throw ParseError("pow expects 2 arguments", name.offset, {});
      }
      return make_pow(args[0], args[1]);
    }
    for (const auto& f : kFunctions) {
      if (f.name == name.text) {
        if (args.size() != 1) {
          throw ParseError(std::string(name.text) + " expects 1 argument", name.offset, {});
        }
        AstNode n;
        n.kind = NodeKind::Call;
        n.func = f.id;
        n.a = args[0];
        return add_node(n);
      }
    }
    throw UnknownFunction(std::string(name.text), name.offset);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  Expr expr_;
};

Expr Expr::parse(std::string_view source, std::vector<std::string> vars) {
  std::unordered_set<std::string> seen;
  for (const auto& v : vars) {
    if (!seen.insert(v).second) {
      throw Error("duplicate variable name '" + v + "'");
    }
  }
  return Parser(source, std::move(vars)).run();
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

int precedence(NodeKind k) {
  switch (k) {
    case NodeKind::Add:
    case NodeKind::Sub:
      return 1;
    case NodeKind::Mul:
    case NodeKind::Div:
      return 2;
    case NodeKind::Neg:
      return 3;
    case NodeKind::PowInt:
    case NodeKind::PowReal:
    case NodeKind::PowGen:
      return 4;
    default:
      return 5;
  }
}

}  // namespace

std::string Expr::serialize_node(int node) const {
  const AstNode& n = nodes_[node];
  auto child = [&](int c, bool parens) {
    std::string s = serialize_node(c);
    return parens ? "(" + s + ")" : s;
  };
  switch (n.kind) {
    case NodeKind::Literal:
      return format_double(n.literal);
    case NodeKind::Variable:
      return vars_[n.var];
    case NodeKind::Neg:
      return "-" + child(n.a, precedence(nodes_[n.a].kind) < 3);
    case NodeKind::Add:
      return child(n.a, precedence(nodes_[n.a].kind) < 1) + " + " +
             child(n.b, precedence(nodes_[n.b].kind) <= 1);
    case NodeKind::Sub:
      return child(n.a, precedence(nodes_[n.a].kind) < 1) + " - " +
             child(n.b, precedence(nodes_[n.b].kind) <= 1);
    case NodeKind::Mul:
      return child(n.a, precedence(nodes_[n.a].kind) < 2) + "*" +
             child(n.b, precedence(nodes_[n.b].kind) <= 2);
    case NodeKind::Div:
      return child(n.a, precedence(nodes_[n.a].kind) < 2) + "/" +
             child(n.b, precedence(nodes_[n.b].kind) <= 2);
    case NodeKind::PowInt:
      return child(n.a, precedence(nodes_[n.a].kind) <= 4) + "^" +
             std::to_string(n.int_exp);
    case NodeKind::PowReal:
      return child(n.a, precedence(nodes_[n.a].kind) <= 4) + "^" +
             format_double(n.literal);
    case NodeKind::PowGen:
      return child(n.a, precedence(nodes_[n.a].kind) <= 4) + "^" +
             child(n.b, precedence(nodes_[n.b].kind) < 3);
    case NodeKind::Call:
      return std::string(func_name(n.func)) + "(" + serialize_node(n.a) + ")";
  }
  return {};
}

std::string Expr::serialize() const { return serialize_node(root_); }

bool Expr::structurally_equal(const Expr& other) const {
  if (vars_ != other.vars_) return false;
  auto eq = [&](auto&& self, int a, int b) -> bool {
    const AstNode& x = nodes_[a];
    const AstNode& y = other.nodes_[b];
    if (x.kind != y.kind) return false;
    switch (x.kind) {
      case NodeKind::Literal:
        return x.literal == y.literal;
      case NodeKind::Variable:
        return x.var == y.var;
      case NodeKind::Neg:
        return self(self, x.a, y.a);
      case NodeKind::PowInt:
        return x.int_exp == y.int_exp && self(self, x.a, y.a);
      case NodeKind::PowReal:
        return x.literal == y.literal && self(self, x.a, y.a);
      case NodeKind::Call:
        return x.func == y.func && self(self, x.a, y.a);
      default:
        return self(self, x.a, y.a) && self(self, x.b, y.b);
    }
  };
  return eq(eq, root_, other.root_);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

double ipow(double base, long long n) {
  if (n < 0) return 1.0 / ipow(base, -n);
  double result = 1.0;
  double b = base;
  while (n > 0) {
    if (n & 1) result *= b;
    b *= b;
    n >>= 1;
  }
  return result;
}

struct Univariate {
  double f0, f1, f2;
};

}  // namespace

// Shared domain checks; the message names the offending sub-expression and
// the argument value.
#define MEIK_DOMAIN_CHECKS                                                        \
  auto domain_fail = [&](int node, const std::string& why, double arg) {          \
    throw DomainError(why + " in '" + serialize_node(node) + "' (argument " +      \
                      format_double(arg) + ")");                                   \
  };                                                                               \
  auto check_div = [&](int node, double denom) {                                   \
    if (denom == 0.0) domain_fail(node, "division by zero", denom);                \
  };                                                                               \
  auto check_pow_int = [&](int node, double base, long long n) {                   \
    if (n < 0 && base == 0.0) domain_fail(node, "zero base with negative exponent", base); \
  };                                                                               \
  auto check_pos_base = [&](int node, double base) {                               \
    if (base <= 0.0)                                                               \
      domain_fail(node, "non-integer exponent requires positive base", base);      \
  };

namespace {

Univariate call_jet(FuncId f, double v) {
  switch (f) {
    case FuncId::Exp: {
      const double e = std::exp(v);
      return {e, e, e};
    }
    case FuncId::Ln:
      return {std::log(v), 1.0 / v, -1.0 / (v * v)};
    case FuncId::Sin:
      return {std::sin(v), std::cos(v), -std::sin(v)};
    case FuncId::Cos:
      return {std::cos(v), -std::sin(v), -std::cos(v)};
    case FuncId::Sinh:
      return {std::sinh(v), std::cosh(v), std::sinh(v)};
    case FuncId::Cosh:
      return {std::cosh(v), std::sinh(v), std::cosh(v)};
    case FuncId::Tan: {
      const double tv = std::tan(v);
      const double d = 1.0 + tv * tv;
      return {tv, d, 2.0 * tv * d};
    }
    case FuncId::Tanh: {
      const double tv = std::tanh(v);
      const double d = 1.0 - tv * tv;
      return {tv, d, -2.0 * tv * d};
    }
    case FuncId::Sqrt: {
      const double r = std::sqrt(v);
      return {r, 0.5 / r, -0.25 / (v * r)};
    }
    case FuncId::Abs: {
      const double s = v > 0.0 ? 1.0 : -1.0;
      return {std::abs(v), s, 0.0};
    }
  }
  return {0, 0, 0};
}

Univariate pow_jet(double base, double p) {
  const double f0 = std::pow(base, p);
  return {f0, p * std::pow(base, p - 1.0), p * (p - 1.0) * std::pow(base, p - 2.0)};
}

Univariate pow_int_jet(double base, long long n) {
  Univariate r;
  r.f0 = ipow(base, n);
  r.f1 = n == 0 ? 0.0 : static_cast<double>(n) * ipow(base, n - 1);
  r.f2 = (n == 0 || n == 1) ? 0.0
                            : static_cast<double>(n) * static_cast<double>(n - 1) * ipow(base, n - 2);
  return r;
}

}  // namespace

Dual2 Expr::jet2(int node, std::span<const double> point) const {
  MEIK_DOMAIN_CHECKS
  const AstNode& n = nodes_[node];
  const int d = arity();
  switch (n.kind) {
    case NodeKind::Literal:
      return Dual2::constant(n.literal, d);
    case NodeKind::Variable:
      return Dual2::variable(point[n.var], d, n.var);
    case NodeKind::Neg:
      return -jet2(n.a, point);
    case NodeKind::Add:
      return jet2(n.a, point) + jet2(n.b, point);
    case NodeKind::Sub:
      return jet2(n.a, point) - jet2(n.b, point);
    case NodeKind::Mul:
      return jet2(n.a, point) * jet2(n.b, point);
    case NodeKind::Div: {
      Dual2 a = jet2(n.a, point);
      Dual2 b = jet2(n.b, point);
      check_div(node, b.value);
      return a / b;
    }
    case NodeKind::PowInt: {
      Dual2 a = jet2(n.a, point);
      check_pow_int(node, a.value, n.int_exp);
      const Univariate u = pow_int_jet(a.value, n.int_exp);
      return Dual2::chain(a, u.f0, u.f1, u.f2);
    }
    case NodeKind::PowReal: {
      Dual2 a = jet2(n.a, point);
      check_pos_base(node, a.value);
      const Univariate u = pow_jet(a.value, n.literal);
      return Dual2::chain(a, u.f0, u.f1, u.f2);
    }
    case NodeKind::PowGen: {
      Dual2 a = jet2(n.a, point);
      check_pos_base(node, a.value);
      Dual2 b = jet2(n.b, point);
      // a^b = exp(b*ln(a))
      const Univariate lg = call_jet(FuncId::Ln, a.value);
      Dual2 ln_a = Dual2::chain(a, lg.f0, lg.f1, lg.f2);
      Dual2 prod = b * ln_a;
      const Univariate ex = call_jet(FuncId::Exp, prod.value);
      return Dual2::chain(prod, ex.f0, ex.f1, ex.f2);
    }
    case NodeKind::Call: {
      Dual2 a = jet2(n.a, point);
      if (n.func == FuncId::Ln && a.value <= 0.0)
        domain_fail(node, "ln argument must be positive", a.value);
      if (n.func == FuncId::Sqrt && a.value <= 0.0)
        domain_fail(node, "sqrt argument must be positive", a.value);
      if (n.func == FuncId::Abs && a.value == 0.0)
        domain_fail(node, "abs is not differentiable at 0", a.value);
      const Univariate u = call_jet(n.func, a.value);
      return Dual2::chain(a, u.f0, u.f1, u.f2);
    }
  }
  return Dual2::constant(0.0, d);
}

Dual1 Expr::jet1(int node, std::span<const double> point) const {
  MEIK_DOMAIN_CHECKS
  const AstNode& n = nodes_[node];
  const int d = arity();
  switch (n.kind) {
    case NodeKind::Literal:
      return Dual1::constant(n.literal, d);
    case NodeKind::Variable:
      return Dual1::variable(point[n.var], d, n.var);
    case NodeKind::Neg:
      return -jet1(n.a, point);
    case NodeKind::Add:
      return jet1(n.a, point) + jet1(n.b, point);
    case NodeKind::Sub:
      return jet1(n.a, point) - jet1(n.b, point);
    case NodeKind::Mul:
      return jet1(n.a, point) * jet1(n.b, point);
    case NodeKind::Div: {
      Dual1 a = jet1(n.a, point);
      Dual1 b = jet1(n.b, point);
      check_div(node, b.value);
      return a / b;
    }
    case NodeKind::PowInt: {
      Dual1 a = jet1(n.a, point);
      check_pow_int(node, a.value, n.int_exp);
      const Univariate u = pow_int_jet(a.value, n.int_exp);
      return Dual1::chain(a, u.f0, u.f1);
    }
    case NodeKind::PowReal: {
      Dual1 a = jet1(n.a, point);
      check_pos_base(node, a.value);
      const Univariate u = pow_jet(a.value, n.literal);
      return Dual1::chain(a, u.f0, u.f1);
    }
    case NodeKind::PowGen: {
      Dual1 a = jet1(n.a, point);
      check_pos_base(node, a.value);
      Dual1 b = jet1(n.b, point);
      const Univariate lg = call_jet(FuncId::Ln, a.value);
      Dual1 ln_a = Dual1::chain(a, lg.f0, lg.f1);
      Dual1 prod = b * ln_a;
      const Univariate ex = call_jet(FuncId::Exp, prod.value);
      return Dual1::chain(prod, ex.f0, ex.f1);
    }
    case NodeKind::Call: {
      Dual1 a = jet1(n.a, point);
      if (n.func == FuncId::Ln && a.value <= 0.0)
        domain_fail(node, "ln argument must be positive", a.value);
      if (n.func == FuncId::Sqrt && a.value <= 0.0)
        domain_fail(node, "sqrt argument must be positive", a.value);
      if (n.func == FuncId::Abs && a.value == 0.0)
        domain_fail(node, "abs is not differentiable at 0", a.value);
      const Univariate u = call_jet(n.func, a.value);
      return Dual1::chain(a, u.f0, u.f1);
    }
  }
  return Dual1::constant(0.0, d);
}

double Expr::value(int node, std::span<const double> point) const {
  MEIK_DOMAIN_CHECKS
  const AstNode& n = nodes_[node];
  switch (n.kind) {
    case NodeKind::Literal:
      return n.literal;
    case NodeKind::Variable:
      return point[n.var];
    case NodeKind::Neg:
      return -value(n.a, point);
    case NodeKind::Add:
      return value(n.a, point) + value(n.b, point);
    case NodeKind::Sub:
      return value(n.a, point) - value(n.b, point);
    case NodeKind::Mul:
      return value(n.a, point) * value(n.b, point);
    case NodeKind::Div: {
      const double a = value(n.a, point);
      const double b = value(n.b, point);
      check_div(node, b);
      return a / b;
    }
    case NodeKind::PowInt: {
      const double a = value(n.a, point);
      check_pow_int(node, a, n.int_exp);
      return ipow(a, n.int_exp);
    }
    case NodeKind::PowReal: {
      const double a = value(n.a, point);
      check_pos_base(node, a);
      return std::pow(a, n.literal);
    }
    case NodeKind::PowGen: {
      const double a = value(n.a, point);
      check_pos_base(node, a);
      return std::pow(a, value(n.b, point));
    }
    case NodeKind::Call: {
      const double a = value(n.a, point);
      if (n.func == FuncId::Ln && a <= 0.0)
        domain_fail(node, "ln argument must be positive", a);
      if (n.func == FuncId::Sqrt && a <= 0.0)
        domain_fail(node, "sqrt argument must be positive", a);
      return call_jet(n.func, a).f0;
    }
  }
  return 0.0;
}

#undef MEIK_DOMAIN_CHECKS

namespace {

void check_point_size(int arity, std::size_t got) {
  if (static_cast<std::size_t>(arity) != got) {
    throw Error("evaluation point has " + std::to_string(got) +
                " components, expression expects " + std::to_string(arity));
  }
}

}  // namespace

Dual2 Expr::eval_jet2(std::span<const double> point) const {
  check_point_size(arity(), point.size());
  return jet2(root_, point);
}

Dual1 Expr::eval_jet1(std::span<const double> point) const {
  check_point_size(arity(), point.size());
  return jet1(root_, point);
}

double Expr::eval_value(std::span<const double> point) const {
  check_point_size(arity(), point.size());
  return value(root_, point);
}

}  // namespace meik
