#include "meik/funcs.hpp"

#include <cmath>
#include <sstream>

namespace meik {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sign(double v) { return v > 0.0 ? 1.0 : -1.0; }

}  // namespace

std::string Interval::str() const {
  std::ostringstream out;
  out << (lo_open ? "(" : "[") << lo << ", " << hi << (hi_open ? ")" : "]");
  return out.str();
}

FFamily FFamily::exponential() {
  FFamily f;
  f.kind_ = FamilyKind::Exp;
  return f;
}

FFamily FFamily::power(double beta) {
  if (beta == 0.0) {
    throw Error("power family with beta = 0 is constant F and not supported");
  }
  FFamily f;
  f.kind_ = FamilyKind::Power;
  f.beta_ = beta;
  return f;
}

FFamily FFamily::quadratic(int eps1, int eps2) {
  if ((eps1 != 1 && eps1 != -1) || (eps2 != 1 && eps2 != -1)) {
    throw Error("quadratic family requires eps1, eps2 in {-1, +1}");
  }
  if (eps1 == -1 && eps2 == -1) {
    throw Error("quadratic family excludes (eps1, eps2) = (-1, -1)");
  }
  FFamily f;
  f.kind_ = FamilyKind::Quadratic;
  f.eps1_ = eps1;
  f.eps2_ = eps2;
  return f;
}

FFamily FFamily::custom_ut(const std::string& f_source,
                           const std::optional<std::string>& inverse_source) {
  FFamily f;
  f.kind_ = FamilyKind::CustomUt;
  f.f_source_ = f_source;
  f.f_expr_ = std::make_shared<const Expr>(Expr::parse(f_source, {"u_t"}));
  if (inverse_source) {
    f.inverse_source_ = *inverse_source;
    f.inverse_expr_ =
        std::make_shared<const Expr>(Expr::parse(*inverse_source, {"sigma"}));
  }
  return f;
}

FFamily FFamily::general(const std::string& source) {
  FFamily f;
  f.kind_ = FamilyKind::General;
  f.f_source_ = source;
  f.f_expr_ = std::make_shared<const Expr>(Expr::parse(source, {"t", "u", "u_t"}));
  return f;
}

std::string FFamily::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case FamilyKind::Exp:
      out << "exp";
      break;
    case FamilyKind::Power:
      out << "power(beta=" << beta_ << ")";
      break;
    case FamilyKind::Quadratic:
      out << "quadratic(eps1=" << eps1_ << ", eps2=" << eps2_ << ")";
      break;
    case FamilyKind::CustomUt:
      out << "custom_ut(" << f_source_ << ")";
      break;
    case FamilyKind::General:
      out << "general(" << f_source_ << ")";
      break;
  }
  return out.str();
}

std::pair<double, double> FFamily::f_eval(double s) const {
  switch (kind_) {
    case FamilyKind::Exp: {
      const double e = std::exp(s);
      return {e, e};
    }
    case FamilyKind::Power: {
      if (s == 0.0) {
        if (beta_ > 1.0) return {0.0, 0.0};
        throw DomainError("|s|^beta is not differentiable at s = 0 for beta <= 1");
      }
      const double as = std::abs(s);
      return {std::pow(as, beta_), beta_ * std::pow(as, beta_ - 1.0) * sign(s)};
    }
    case FamilyKind::Quadratic:
      return {eps2_ * s * s + eps1_, 2.0 * eps2_ * s};
    case FamilyKind::CustomUt: {
      const double p[1] = {s};
      const Dual1 j = f_expr_->eval_jet1(p);
      return {j.value, j.grad(0)};
    }
    case FamilyKind::General:
      throw DomainError("general F(t,u,u_t) requires a full jet; f_eval(s) is undefined");
  }
  return {0.0, 0.0};
}

GeneralJet FFamily::general_eval(double t, double u, double ut) const {
  if (kind_ == FamilyKind::General) {
    const double p[3] = {t, u, ut};
    const Dual1 j = f_expr_->eval_jet1(p);
    return {j.value, j.grad(0), j.grad(1), j.grad(2)};
  }
  const auto [f, fut] = f_eval(ut);
  return {f, 0.0, 0.0, fut};
}

std::vector<BranchSelector> FFamily::branches() const {
  switch (kind_) {
    case FamilyKind::Exp:
    case FamilyKind::CustomUt:
      return {BranchSelector::principal()};
    case FamilyKind::Power:
    case FamilyKind::Quadratic:
      return {BranchSelector::principal(), BranchSelector::negative()};
    case FamilyKind::General:
      return {};
  }
  return {};
}

void FFamily::check_invertible() const {
  if (kind_ == FamilyKind::General) {
    throw DomainError("general F(t,u,u_t) has no inverse branch");
  }
  if (kind_ == FamilyKind::CustomUt && !inverse_expr_) {
    throw NoInverse("custom family '" + f_source_ + "' was built without an inverse expression");
  }
}

InverseBranch FFamily::branch(BranchSelector sel) const {
  check_invertible();
  if (sel.kind == BranchSelector::Kind::Index && sel.index != 0 && sel.index != 1) {
    throw DomainError("branch index " + std::to_string(sel.index) +
                      " out of range for family " + describe());
  }
  if (sel.is_negative() && (kind_ == FamilyKind::Exp || kind_ == FamilyKind::CustomUt)) {
    throw DomainError("family " + describe() + " has no negative inverse branch");
  }

  InverseBranch br;
  br.selector = sel;
  switch (kind_) {
    case FamilyKind::Exp:
      br.domain = {0.0, kInf, true, true};
      break;
    case FamilyKind::Power:
      // sigma = |s|^beta >= 0. The endpoint sigma = 0 is kept only where Phi'
      // stays finite there (0 < beta <= 1).
      if (beta_ > 0.0 && beta_ <= 1.0) {
        br.domain = {0.0, kInf, false, true};
      } else {
        br.domain = {0.0, kInf, true, true};
      }
      break;
    case FamilyKind::Quadratic:
      if (eps2_ == 1) {
        br.domain = {static_cast<double>(eps1_), kInf, false, true};
      } else {
        br.domain = {-kInf, static_cast<double>(eps1_), true, false};
      }
      break;
    case FamilyKind::CustomUt:
      br.domain = {-kInf, kInf, true, true};
      break;
    case FamilyKind::General:
      break;  // unreachable
  }
  return br;
}

Jet2 FFamily::phi_jet2(const InverseBranch& br, double sigma) const {
  check_invertible();
  if (!br.domain.contains(sigma)) {
    throw DomainError("sigma = " + std::to_string(sigma) + " outside " +
                      br.selector.name() + " branch domain " + br.domain.str() +
                      " of family " + describe());
  }
  const double sgn = br.selector.is_negative() ? -1.0 : 1.0;
  switch (kind_) {
    case FamilyKind::Exp:
      return {std::log(sigma), 1.0 / sigma, -1.0 / (sigma * sigma)};
    case FamilyKind::Power: {
      const double r = 1.0 / beta_;
      return {sgn * std::pow(sigma, r), sgn * r * std::pow(sigma, r - 1.0),
              sgn * r * (r - 1.0) * std::pow(sigma, r - 2.0)};
    }
    case FamilyKind::Quadratic: {
      const double q = eps2_ * (sigma - eps1_);
      const double root = std::sqrt(q);
      return {sgn * root, sgn * eps2_ / (2.0 * root), -sgn / (4.0 * q * root)};
    }
    case FamilyKind::CustomUt: {
      const double p[1] = {sigma};
      const Dual2 j = inverse_expr_->eval_jet2(p);
      return {j.value, j.grad(0), j.hess(0, 0)};
    }
    case FamilyKind::General:
      break;  // unreachable
  }
  return {};
}

std::pair<double, double> FFamily::phi_eval(const InverseBranch& br, double sigma) const {
  const Jet2 j = phi_jet2(br, sigma);
  return {j.v, j.d1};
}

nlohmann::json FFamily::to_json() const {
  nlohmann::json j;
  switch (kind_) {
    case FamilyKind::Exp:
      j["family"] = "exp";
      break;
    case FamilyKind::Power:
      j["family"] = "power";
      j["beta"] = beta_;
      break;
    case FamilyKind::Quadratic:
      j["family"] = "quadratic";
      j["eps1"] = eps1_;
      j["eps2"] = eps2_;
      break;
    case FamilyKind::CustomUt:
      j["family"] = "custom_ut";
      j["expr"] = f_source_;
      if (inverse_expr_) j["inverse"] = inverse_source_;
      break;
    case FamilyKind::General:
      j["family"] = "general";
      j["expr"] = f_source_;
      break;
  }
  return j;
}

FFamily FFamily::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
    throw ScenarioError("family: expected an object with a 'family' string");
  }
  const std::string name = j.at("family").get<std::string>();
  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) {
      throw ScenarioError("family '" + name + "' requires field '" + key + "'");
    }
    return j.at(key);
  };
  if (name == "exp") return exponential();
  if (name == "power") return power(require("beta").get<double>());
  if (name == "quadratic")
    return quadratic(require("eps1").get<int>(), require("eps2").get<int>());
  if (name == "custom_ut") {
    std::optional<std::string> inv;
    if (j.contains("inverse")) inv = j.at("inverse").get<std::string>();
    return custom_ut(require("expr").get<std::string>(), inv);
  }
  if (name == "general") return general(require("expr").get<std::string>());
  throw ScenarioError("unknown family '" + name + "'");
}

std::vector<std::string> PsiFunction::tau_names(int k) {
  std::vector<std::string> names;
  names.reserve(k);
  for (int i = 1; i <= k; ++i) names.push_back("tau" + std::to_string(i));
  return names;
}

PsiFunction::PsiFunction(const std::string& source, int arity) : arity_(arity) {
  expr_ = std::make_shared<const Expr>(Expr::parse(source, tau_names(arity)));
}

WFunctions::WFunctions(const std::vector<std::string>& sources, int arity)
    : arity_(arity) {
  const auto names = PsiFunction::tau_names(arity);
  exprs_.reserve(sources.size());
  for (const auto& s : sources) {
    exprs_.push_back(std::make_shared<const Expr>(Expr::parse(s, names)));
  }
}

}  // namespace meik
