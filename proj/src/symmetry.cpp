#include "meik/symmetry.hpp"

#include <cmath>
#include <sstream>

namespace meik {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

double uniform_in(std::uint64_t& state, double lo, double hi) {
  return lo + (hi - lo) * uniform01(state);
}

double gaussian(std::uint64_t& state) {
  const double u1 = 1.0 - uniform01(state);  // (0, 1]
  const double u2 = uniform01(state);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::string num(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::vector<std::string> VectorField::coefficient_vars(int n) {
  std::vector<std::string> vars;
  vars.reserve(n + 2);
  vars.push_back("t");
  for (int i = 1; i <= n; ++i) vars.push_back("x" + std::to_string(i));
  vars.push_back("u");
  return vars;
}

VectorField VectorField::from_sources(const std::string& id, int n,
                                      const std::string& xi_t,
                                      const std::vector<std::string>& xi_x,
                                      const std::string& eta) {
  if (static_cast<int>(xi_x.size()) != n) {
    throw Error("generator '" + id + "' needs " + std::to_string(n) +
                " spatial coefficients");
  }
  const auto vars = coefficient_vars(n);
  std::vector<Expr> xs;
  xs.reserve(n);
  for (const auto& s : xi_x) xs.push_back(Expr::parse(s, vars));
  return VectorField{id, Expr::parse(xi_t, vars), std::move(xs), Expr::parse(eta, vars)};
}

nlohmann::json VectorField::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  j["xi_t"] = xi_t.serialize();
  nlohmann::json xs = nlohmann::json::array();
  for (const auto& e : xi_x) xs.push_back(e.serialize());
  j["xi_x"] = xs;
  j["eta"] = eta.serialize();
  return j;
}

VectorField VectorField::from_json(const nlohmann::json& j, int n) {
  if (!j.is_object()) throw ScenarioError("generator: expected an object");
  auto str = [&](const char* key) {
    if (!j.contains(key)) throw ScenarioError(std::string("generator missing '") + key + "'");
    return j.at(key).get<std::string>();
  };
  std::vector<std::string> xs;
  if (j.contains("xi_x")) {
    for (const auto& e : j.at("xi_x")) xs.push_back(e.get<std::string>());
  }
  if (static_cast<int>(xs.size()) != n) {
    throw ScenarioError("generator 'xi_x' must list " + std::to_string(n) + " expressions");
  }
  return from_sources(j.value("id", "custom"), n, str("xi_t"), xs, str("eta"));
}

Prolongation1 prolong1(const VectorField& X, const JetPoint& jet) {
  const int n = X.n();
  if (jet.n() != n) throw Error("jet dimension does not match generator dimension");

  // Coefficient jets over (t, x1..xn, u).
  Eigen::VectorXd p(n + 2);
  p(0) = jet.t;
  p.segment(1, n) = jet.x;
  p(n + 1) = jet.u;
  std::span<const double> ps(p.data(), static_cast<std::size_t>(p.size()));

  Dual1 xt, et;
  std::vector<Dual1> xx(n);
  try {
    xt = X.xi_t.eval_jet1(ps);
    et = X.eta.eval_jet1(ps);
    for (int a = 0; a < n; ++a) xx[a] = X.xi_x[a].eval_jet1(ps);
  } catch (const Error& e) {
    throw EvalFailure("generator '" + X.id + "' coefficient evaluation failed: " + e.what());
  }

  // Total derivative of f in direction mu: grad components are
  // (d/dt, d/dx1.., d/du); u_mu is u_t for mu = 0, u_a otherwise.
  auto total = [&](const Dual1& f, int mu, double u_mu) {
    return f.grad(mu) + u_mu * f.grad(n + 1);
  };

  Prolongation1 out;
  out.eta1_x.resize(n);
  // mu = t
  {
    double v = total(et, 0, jet.u_t) - jet.u_t * total(xt, 0, jet.u_t);
    for (int a = 0; a < n; ++a) v -= jet.u_x(a) * total(xx[a], 0, jet.u_t);
    out.eta1_t = v;
  }
  for (int b = 0; b < n; ++b) {
    const int mu = b + 1;
    const double u_mu = jet.u_x(b);
    double v = total(et, mu, u_mu) - jet.u_t * total(xt, mu, u_mu);
    for (int a = 0; a < n; ++a) v -= jet.u_x(a) * total(xx[a], mu, u_mu);
    out.eta1_x(b) = v;
  }
  return out;
}

double symmetry_defect(const VectorField& X, const FFamily& F, const JetPoint& jet) {
  const Prolongation1 pr = prolong1(X, jet);

  Eigen::VectorXd p(X.n() + 2);
  p(0) = jet.t;
  p.segment(1, X.n()) = jet.x;
  p(X.n() + 1) = jet.u;
  std::span<const double> ps(p.data(), static_cast<std::size_t>(p.size()));
  double xi_t_val, eta_val;
  try {
    xi_t_val = X.xi_t.eval_value(ps);
    eta_val = X.eta.eval_value(ps);
  } catch (const Error& e) {
    throw EvalFailure("generator '" + X.id + "' coefficient evaluation failed: " + e.what());
  }

  const GeneralJet g = F.general_eval(jet.t, jet.u, jet.u_t);
  const double action = 2.0 * jet.u_x.dot(pr.eta1_x) - g.fut * pr.eta1_t -
                        g.ft * xi_t_val - g.fu * eta_val;
  return std::abs(action);
}

OnManifoldSampler::OnManifoldSampler(FFamily F, int n, SamplerRanges ranges,
                                     std::uint64_t seed)
    : family_(std::move(F)), n_(n), ranges_(ranges), state_(seed ^ 0x6a09e667f3bcc909ULL) {}

JetPoint OnManifoldSampler::sample() {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    JetPoint jet;
    jet.t = uniform_in(state_, ranges_.t_min, ranges_.t_max);
    jet.u = uniform_in(state_, ranges_.u_min, ranges_.u_max);
    jet.u_t = uniform_in(state_, ranges_.ut_min, ranges_.ut_max);
    jet.x.resize(n_);
    for (int i = 0; i < n_; ++i) {
      jet.x(i) = uniform_in(state_, ranges_.x_min, ranges_.x_max);
    }
    double f;
    try {
      f = family_.general_eval(jet.t, jet.u, jet.u_t).f;
    } catch (const Error&) {
      continue;
    }
    if (!std::isfinite(f) || f < 0.0) continue;

    Eigen::VectorXd dir(n_);
    double norm2 = 0.0;
    for (int i = 0; i < n_; ++i) {
      dir(i) = gaussian(state_);
      norm2 += dir(i) * dir(i);
    }
    if (norm2 == 0.0) continue;
    jet.u_x = std::sqrt(f) / std::sqrt(norm2) * dir;
    return jet;
  }
  throw EvalFailure("on-manifold sampler exhausted 10000 attempts (F < 0 everywhere sampled?)");
}

// ---------------------------------------------------------------------------
// Classification table registry
// ---------------------------------------------------------------------------

namespace {

std::string zero() { return "0"; }

std::vector<std::string> zeros(int n) {
  return std::vector<std::string>(n, zero());
}

void add_translations(std::vector<VectorField>& out, int n) {
  for (int a = 1; a <= n; ++a) {
    auto xs = zeros(n);
    xs[a - 1] = "1";
    out.push_back(VectorField::from_sources("d_x" + std::to_string(a), n, zero(), xs, zero()));
  }
}

void add_rotations(std::vector<VectorField>& out, int n) {
  for (int a = 1; a <= n; ++a) {
    for (int b = a + 1; b <= n; ++b) {
      auto xs = zeros(n);
      xs[b - 1] = "x" + std::to_string(a);
      xs[a - 1] = "-x" + std::to_string(b);
      out.push_back(VectorField::from_sources(
          "J_" + std::to_string(a) + std::to_string(b), n, zero(), xs, zero()));
    }
  }
}

void add_time_translation(std::vector<VectorField>& out, int n) {
  out.push_back(VectorField::from_sources("d_t", n, "1", zeros(n), zero()));
}

void add_u_translation(std::vector<VectorField>& out, int n) {
  out.push_back(VectorField::from_sources("d_u", n, zero(), zeros(n), "1"));
}

void add_dilation(std::vector<VectorField>& out, int n) {
  std::vector<std::string> xs;
  for (int a = 1; a <= n; ++a) xs.push_back("x" + std::to_string(a));
  out.push_back(VectorField::from_sources("D", n, "t", xs, "u"));
}

std::string s_squared(int n, int eps1, int eps2) {
  std::ostringstream out;
  for (int a = 1; a <= n; ++a) {
    if (a > 1) out << " + ";
    out << "x" << a << "^2";
  }
  out << " - (" << eps1 << ")*u^2 - (" << eps2 << ")*t^2";
  return out.str();
}

// Row 7 coefficients at n = 3: Minkowski metric diag(1,-1,-1,-1) on
// coordinates (t, x1, x2, x3); the supplied b entries are extended
// antisymmetrically (the symmetric trace part is the d-term).
struct Row7Builder {
  const Row7Functions& fn;
  std::array<std::string, 4> coord = {"t", "x1", "x2", "x3"};
  std::array<int, 4> metric = {1, -1, -1, -1};

  std::string wrap(const std::string& s) const { return "(" + s + ")"; }

  std::string b_entry(int mu, int kappa) const {
    if (mu == kappa) return zero();
    if (mu < kappa) {
      auto it = fn.b.find({mu, kappa});
      return it == fn.b.end() ? zero() : it->second;
    }
    auto it = fn.b.find({kappa, mu});
    return it == fn.b.end() ? zero() : "-" + wrap(it->second);
  }

  std::string c_dot_x() const {
    std::ostringstream out;
    for (int mu = 0; mu < 4; ++mu) {
      if (mu) out << " + ";
      out << "(" << metric[mu] << ")*" << wrap(fn.c[mu]) << "*" << coord[mu];
    }
    return out.str();
  }

  std::string x_dot_x() const { return "t^2 - x1^2 - x2^2 - x3^2"; }

  std::string xi(int kappa, bool with_c, bool with_b, bool with_d, bool with_a) const {
    std::vector<std::string> terms;
    if (with_c) {
      terms.push_back("2*(" + c_dot_x() + ")*" + coord[kappa]);
      terms.push_back("-" + wrap(fn.c[kappa]) + "*(" + x_dot_x() + ")");
    }
    if (with_b) {
      for (int nu = 0; nu < 4; ++nu) {
        const std::string b = b_entry(nu, kappa);
        if (b == "0") continue;
        terms.push_back("(" + std::to_string(metric[nu]) + ")*" + wrap(b) + "*" + coord[nu]);
      }
    }
    if (with_d) terms.push_back(wrap(fn.d) + "*" + coord[kappa]);
    if (with_a) terms.push_back(wrap(fn.a[kappa]));

    if (terms.empty()) return zero();
    std::string out = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) {
      out += " + " + terms[i];
    }
    return out;
  }

  VectorField build(const std::string& id, bool with_c, bool with_b, bool with_d,
                    bool with_a, bool with_eta) const {
    std::vector<std::string> xs;
    for (int kappa = 1; kappa < 4; ++kappa) {
      xs.push_back(xi(kappa, with_c, with_b, with_d, with_a));
    }
    return VectorField::from_sources(id, 3, xi(0, with_c, with_b, with_d, with_a), xs,
                                     with_eta ? wrap(fn.eta) : zero());
  }
};

std::string format_param(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  return num(v);
}

}  // namespace

std::vector<Row7Functions> row7_default_choices() {
  std::vector<Row7Functions> choices;
  {
    // Constants only.
    Row7Functions f;
    f.c = {"1", "0", "0", "0"};
    f.b[{0, 1}] = "1";
    f.d = "1";
    f.a = {"1", "0", "1", "0"};
    f.eta = "1";
    choices.push_back(f);
  }
  {
    // Quadratic dependence on u.
    Row7Functions f;
    f.c = {"0", "u^2", "0", "0"};
    f.b[{1, 2}] = "u^2";
    f.d = "u^2";
    f.a = {"0", "u^2", "0", "0"};
    f.eta = "u^2";
    choices.push_back(f);
  }
  {
    // Mixed constants, u and u^2.
    Row7Functions f;
    f.c = {"u", "1", "0", "u^2"};
    f.b[{0, 2}] = "u";
    f.b[{1, 3}] = "1+u";
    f.d = "u";
    f.a = {"u^2", "0", "1", "u"};
    f.eta = "1+u^2";
    choices.push_back(f);
  }
  return choices;
}

TableRow make_table_row(int row, int n, const TableParams& p) {
  if (row < 0 || row > 12) {
    throw Error("table row must be in 0..12, got " + std::to_string(row));
  }
  if (n < 1) throw Error("table row requires n >= 1");
  if (row == 7 && n != 3) {
    throw Error("row 7 is supported at n = 3 only (Minkowski indices 0..3)");
  }

  TableRow out;
  out.row_id = row;
  out.n = n;
  std::vector<VectorField>& g = out.generators;

  add_translations(g, n);
  add_rotations(g, n);

  switch (row) {
    case 0: {
      out.F = FFamily::general(p.f0);
      break;
    }
    case 1: {
      if (p.delta != 0.0 && p.delta != 1.0) {
        throw Error("row 1 requires delta in {0, 1}");
      }
      out.F = FFamily::general("exp((" + format_param(p.delta) + ")*t)*(" + p.f + ")");
      std::vector<std::string> xs;
      for (int a = 1; a <= n; ++a) {
        xs.push_back("-(" + format_param(p.delta) + ")*x" + std::to_string(a));
      }
      g.push_back(VectorField::from_sources("R1", n, "2", xs, zero()));
      break;
    }
    case 2: {
      out.F = FFamily::general("exp(u)*(" + p.h + ")");
      add_time_translation(g, n);
      std::vector<std::string> xs;
      for (int a = 1; a <= n; ++a) xs.push_back("-x" + std::to_string(a));
      g.push_back(VectorField::from_sources("R2", n, zero(), xs, "2"));
      break;
    }
    case 3: {
      if (p.delta == 2.0) throw Error("row 3 requires delta != 2");
      out.F = FFamily::general("abs(u)^(" + format_param(2.0 - p.delta) + ")*(" + p.h + ")");
      add_time_translation(g, n);
      std::vector<std::string> xs;
      for (int a = 1; a <= n; ++a) {
        xs.push_back("(" + format_param(p.delta) + ")*x" + std::to_string(a));
      }
      g.push_back(VectorField::from_sources("R3", n, "2*t", xs, "2*u"));
      break;
    }
    case 4: {
      out.F = FFamily::custom_ut(p.h, std::nullopt);
      add_time_translation(g, n);
      add_u_translation(g, n);
      add_dilation(g, n);
      break;
    }
    case 5: {
      out.F = FFamily::exponential();
      add_time_translation(g, n);
      add_u_translation(g, n);
      add_dilation(g, n);
      std::vector<std::string> xs;
      for (int a = 1; a <= n; ++a) xs.push_back("x" + std::to_string(a));
      g.push_back(VectorField::from_sources("R5", n, zero(), xs, "-2*t"));
      break;
    }
    case 6: {
      if (p.beta == 0.0 || p.beta == 1.0 || p.beta == 2.0) {
        throw Error("row 6 requires beta not in {0, 1, 2}");
      }
      out.F = FFamily::power(p.beta);
      add_time_translation(g, n);
      add_u_translation(g, n);
      add_dilation(g, n);
      std::vector<std::string> xs;
      for (int a = 1; a <= n; ++a) {
        xs.push_back("(" + format_param(p.beta - 2.0) + ")*x" + std::to_string(a));
      }
      g.push_back(VectorField::from_sources("R6", n, zero(), xs, "-2*u"));
      break;
    }
    case 7: {
      out.F = FFamily::power(2.0);
      Row7Builder builder{p.row7};
      g.push_back(builder.build("G7", true, true, true, true, true));
      // The pieces are symmetries individually; list them for finer reports.
      g.push_back(builder.build("G7_c", true, false, false, false, false));
      g.push_back(builder.build("G7_b", false, true, false, false, false));
      g.push_back(builder.build("G7_d", false, false, true, false, false));
      g.push_back(builder.build("G7_a", false, false, false, true, false));
      g.push_back(builder.build("G7_eta", false, false, false, false, true));
      break;
    }
    case 8: {
      out.F = FFamily::quadratic(p.eps1, p.eps2);
      add_time_translation(g, n);
      add_u_translation(g, n);
      add_dilation(g, n);
      const std::string e1 = "(" + std::to_string(p.eps1) + ")";
      const std::string e2 = "(" + std::to_string(p.eps2) + ")";
      const std::string s2 = "(" + s_squared(n, p.eps1, p.eps2) + ")";
      for (int a = 1; a <= n; ++a) {
        const std::string xa = "x" + std::to_string(a);
        auto xs = zeros(n);
        xs[a - 1] = "u";
        g.push_back(VectorField::from_sources("J_u" + std::to_string(a), n, zero(), xs,
                                              e1 + "*" + xa));
        xs = zeros(n);
        xs[a - 1] = "t";
        g.push_back(VectorField::from_sources("J_t" + std::to_string(a), n,
                                              e2 + "*" + xa, xs, zero()));
      }
      g.push_back(VectorField::from_sources(
          "J_ut", n, "u", zeros(n),
          "-(" + std::to_string(p.eps1 * p.eps2) + ")*t"));
      for (int a = 1; a <= n; ++a) {
        const std::string xa = "x" + std::to_string(a);
        std::vector<std::string> xs;
        for (int b = 1; b <= n; ++b) {
          const std::string xb = "x" + std::to_string(b);
          std::string coeff = "2*" + xa + "*" + xb;
          if (b == a) coeff += " - " + s2;
          xs.push_back(coeff);
        }
        g.push_back(VectorField::from_sources("K_" + std::to_string(a), n,
                                              "2*" + xa + "*t", xs, "2*" + xa + "*u"));
      }
      {
        std::vector<std::string> xs;
        for (int b = 1; b <= n; ++b) xs.push_back("2*u*x" + std::to_string(b));
        g.push_back(VectorField::from_sources("K_u", n, "2*u*t", xs,
                                              "2*u*u + " + e1 + "*" + s2));
      }
      {
        std::vector<std::string> xs;
        for (int b = 1; b <= n; ++b) xs.push_back("2*t*x" + std::to_string(b));
        g.push_back(VectorField::from_sources("K_t", n, "2*t*t + " + e2 + "*" + s2, xs,
                                              "2*t*u"));
      }
      break;
    }
    case 9: {
      if (p.eps1 * p.eps1 != 1 || p.eps2 * p.eps2 != 1) {
        throw Error("row 9 requires eps1, eps2 in {-1, +1}");
      }
      out.F = FFamily::general("(" + std::to_string(p.eps2) + ")*exp(u)*u_t^2 + (" +
                               std::to_string(p.eps1) + ")");
      add_time_translation(g, n);
      g.push_back(VectorField::from_sources("R9a", n, "t", zeros(n), "2"));
      g.push_back(VectorField::from_sources(
          "R9b", n,
          "t^2 - (" + std::to_string(4 * p.eps1 * p.eps2) + ")*exp(u)", zeros(n), "4*t"));
      break;
    }
    case 10: {
      out.F = FFamily::general("u_t^2/cos(u)^2 + 1");
      add_time_translation(g, n);
      g.push_back(VectorField::from_sources("R10a", n, "cos(t)*tan(u)", zeros(n), "-sin(t)"));
      g.push_back(VectorField::from_sources("R10b", n, "sin(t)*tan(u)", zeros(n), "cos(t)"));
      out.ranges.u_min = -1.1;
      out.ranges.u_max = 1.1;
      break;
    }
    case 11: {
      if (p.sign11 != 1 && p.sign11 != -1) throw Error("row 11 sign must be +1 or -1");
      out.F = FFamily::general(p.sign11 == 1 ? "u_t^2/cos(u)^2 - 1"
                                             : "1 - u_t^2/cos(u)^2");
      add_time_translation(g, n);
      g.push_back(VectorField::from_sources("R11a", n, "cosh(t)*tan(u)", zeros(n), "sinh(t)"));
      g.push_back(VectorField::from_sources("R11b", n, "sinh(t)*tan(u)", zeros(n), "cosh(t)"));
      out.ranges.u_min = -1.1;
      out.ranges.u_max = 1.1;
      out.ranges.ut_min = p.sign11 == 1 ? -2.0 : -1.0;
      out.ranges.ut_max = p.sign11 == 1 ? 2.0 : 1.0;
      break;
    }
    case 12: {
      out.F = FFamily::general("u_t^2/cosh(u)^2 + 1");
      add_time_translation(g, n);
      g.push_back(VectorField::from_sources("R12a", n, "cosh(t)*tanh(u)", zeros(n), "-sinh(t)"));
      g.push_back(VectorField::from_sources("R12b", n, "sinh(t)*tanh(u)", zeros(n), "-cosh(t)"));
      break;
    }
    default:
      break;
  }
  out.F.set_table_row(row);
  return out;
}

std::vector<VectorField> negative_controls(int n) {
  std::vector<VectorField> out;
  {
    auto xs = zeros(n);
    xs[0] = "x1";
    out.push_back(VectorField::from_sources("N_x1dx1", n, zero(), xs, zero()));
  }
  out.push_back(VectorField::from_sources("N_tdt", n, "t", zeros(n), zero()));
  return out;
}

TableReport verify_table(const TableRow& row, int samples, double tol,
                         std::uint64_t seed) {
  if (samples < 1) throw Error("verify_table requires samples >= 1");
  TableReport report;
  report.row_id = row.row_id;
  report.tol = tol;
  report.pass = true;

  for (std::size_t i = 0; i < row.generators.size(); ++i) {
    const VectorField& X = row.generators[i];
    std::uint64_t sub = seed ^ (0x9e3779b97f4a7c15ULL * (i + 1));
    OnManifoldSampler sampler(row.F, row.n, row.ranges, sub);
    double max_defect = 0.0;
    for (int s = 0; s < samples; ++s) {
      const JetPoint jet = sampler.sample();
      max_defect = std::max(max_defect, symmetry_defect(X, row.F, jet));
    }
    report.generators.push_back({X.id, max_defect, samples});
    if (max_defect > tol) report.pass = false;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Affine flows
// ---------------------------------------------------------------------------

Eigen::MatrixXd expm_small(const Eigen::MatrixXd& a) {
  const int m = static_cast<int>(a.rows());
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  }
  Eigen::MatrixXd scaled = a / std::pow(2.0, squarings);
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(m, m);
  for (int k = 1; k <= 24; ++k) {
    term = (term * scaled / static_cast<double>(k)).eval();
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = (result * result).eval();
  return result;
}

namespace {

struct AffineCoeff {
  Eigen::VectorXd linear;  // over (t, x1..xn, u)
  double constant = 0.0;
};

// Certify that an expression is affine in (t, x, u) by checking an exactly
// zero Hessian and a constant gradient at three fixed probe points.
AffineCoeff extract_affine(const Expr& e, int n, const std::string& id) {
  const int m = n + 2;
  std::vector<Eigen::VectorXd> probes;
  probes.push_back(Eigen::VectorXd::Zero(m));
  Eigen::VectorXd p1(m), p2(m);
  std::uint64_t state = 0x243f6a8885a308d3ULL;
  for (int i = 0; i < m; ++i) p1(i) = 2.0 * uniform01(state) - 1.0;
  for (int i = 0; i < m; ++i) p2(i) = 2.0 * uniform01(state) - 1.0;
  probes.push_back(p1);
  probes.push_back(p2);

  AffineCoeff out;
  bool first = true;
  for (const auto& p : probes) {
    Dual2 j;
    try {
      j = e.eval_jet2(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
    } catch (const Error& err) {
      throw NonAffineGenerator("generator '" + id +
                               "' coefficient not evaluable on probe points: " + err.what());
    }
    if (j.hess.cwiseAbs().maxCoeff() > 1e-10) {
      throw NonAffineGenerator("generator '" + id + "' has non-affine coefficient '" +
                               e.serialize() + "'");
    }
    if (first) {
      out.linear = j.grad;
      out.constant = j.value - j.grad.dot(p);
      first = false;
    } else if ((j.grad - out.linear).lpNorm<Eigen::Infinity>() > 1e-10) {
      throw NonAffineGenerator("generator '" + id + "' has non-affine coefficient '" +
                               e.serialize() + "'");
    }
  }
  return out;
}

}  // namespace

AffineFlow::AffineFlow(const VectorField& X, double eps) : n_(X.n()), eps_(eps) {
  const int n = n_;
  const int m = n + 2;  // state (t, x, u)

  std::vector<AffineCoeff> coeffs;
  coeffs.reserve(m);
  coeffs.push_back(extract_affine(X.xi_t, n, X.id));
  for (int a = 0; a < n; ++a) coeffs.push_back(extract_affine(X.xi_x[a], n, X.id));
  coeffs.push_back(extract_affine(X.eta, n, X.id));

  // The base-point flow must close on (t, x): xi may not involve u.
  for (int i = 0; i < n + 1; ++i) {
    if (std::abs(coeffs[i].linear(m - 1)) > 1e-12) {
      throw NonAffineGenerator(
          "generator '" + X.id +
          "' has xi coefficients depending on u; its flow does not act on base points alone");
    }
  }

  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(m + 1, m + 1);
  for (int i = 0; i < m; ++i) {
    full.block(i, 0, 1, m) = coeffs[i].linear.transpose();
    full(i, m) = coeffs[i].constant;
  }
  forward_ = expm_small(eps * full);

  Eigen::MatrixXd base = Eigen::MatrixXd::Zero(n + 2, n + 2);
  for (int i = 0; i < n + 1; ++i) {
    base.block(i, 0, 1, n + 1) = coeffs[i].linear.head(n + 1).transpose();
    base(i, n + 1) = coeffs[i].constant;
  }
  backward_base_ = expm_small(-eps * base);
}

std::pair<double, Eigen::VectorXd> AffineFlow::backward_base(
    double t, const Eigen::VectorXd& x) const {
  Eigen::VectorXd z(n_ + 2);
  z(0) = t;
  z.segment(1, n_) = x;
  z(n_ + 1) = 1.0;
  const Eigen::VectorXd z0 = backward_base_ * z;
  return {z0(0), z0.segment(1, n_)};
}

double AffineFlow::push_value(double t0, const Eigen::VectorXd& x0, double u0) const {
  const int m = n_ + 2;
  double v = forward_(m - 1, m);  // constant
  v += forward_(m - 1, 0) * t0;
  for (int i = 0; i < n_; ++i) v += forward_(m - 1, 1 + i) * x0(i);
  v += forward_(m - 1, m - 1) * u0;
  return v;
}

ScalarField AffineFlow::transform(ScalarField field) const {
  return [flow = *this, field = std::move(field)](double t, const Eigen::VectorXd& x) {
    const auto [t0, x0] = flow.backward_base(t, x);
    return flow.push_value(t0, x0, field(t0, x0));
  };
}

JetPoint AffineFlow::push_jet(const JetPoint& source, double t,
                              const Eigen::VectorXd& x) const {
  const int m = n_ + 2;
  JetPoint out;
  out.t = t;
  out.x = x;
  out.u = push_value(source.t, source.x, source.u);

  // u'(q) = w.z0(q) + g u(z0(q)) + h with z0 affine in q: chain rule through
  // the backward base matrix.
  Eigen::VectorXd v(n_ + 1);
  const double g = forward_(m - 1, m - 1);
  v(0) = forward_(m - 1, 0) + g * source.u_t;
  for (int i = 0; i < n_; ++i) v(1 + i) = forward_(m - 1, 1 + i) + g * source.u_x(i);

  Eigen::VectorXd grad(n_ + 1);
  for (int i = 0; i < n_ + 1; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n_ + 1; ++j) acc += v(j) * backward_base_(j, i);
    grad(i) = acc;
  }
  out.u_t = grad(0);
  out.u_x = grad.segment(1, n_);
  return out;
}

}  // namespace meik
