#include "meik/scenario.hpp"

#include <fstream>

namespace meik {

namespace {

using nlohmann::json;

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError(path + " must be a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ScenarioError(path + " must be an integer");
  return j.get<int>();
}

AxisSpec parse_axis(const json& j, const std::string& path) {
  if (!j.is_object()) throw ScenarioError(path + " must be an object {min,max,steps}");
  AxisSpec a;
  if (!j.contains("min") || !j.contains("max") || !j.contains("steps")) {
    throw ScenarioError(path + " requires min, max and steps");
  }
  a.min = get_number(j.at("min"), path + ".min");
  a.max = get_number(j.at("max"), path + ".max");
  a.steps = get_int(j.at("steps"), path + ".steps");
  if (a.steps < 1) throw ScenarioError(path + ".steps must be >= 1");
  if (a.steps > 1 && a.max < a.min) throw ScenarioError(path + ": max < min");
  return a;
}

Row7Functions parse_row7(const json& j) {
  Row7Functions f;
  if (j.contains("c")) {
    const auto& c = j.at("c");
    if (!c.is_array() || c.size() != 4) throw ScenarioError("table.params.row7.c must list 4 expressions");
    for (int i = 0; i < 4; ++i) f.c[i] = c.at(i).get<std::string>();
  }
  if (j.contains("b")) {
    const auto& b = j.at("b");
    if (!b.is_array()) throw ScenarioError("table.params.row7.b must be an array of {mu,kappa,expr}");
    for (const auto& e : b) {
      const int mu = get_int(e.at("mu"), "row7.b.mu");
      const int kappa = get_int(e.at("kappa"), "row7.b.kappa");
      if (mu < 0 || mu > 3 || kappa < 0 || kappa > 3 || mu >= kappa) {
        throw ScenarioError("row7.b entries need 0 <= mu < kappa <= 3");
      }
      f.b[{mu, kappa}] = e.at("expr").get<std::string>();
    }
  }
  if (j.contains("d")) f.d = j.at("d").get<std::string>();
  if (j.contains("a")) {
    const auto& a = j.at("a");
    if (!a.is_array() || a.size() != 4) throw ScenarioError("table.params.row7.a must list 4 expressions");
    for (int i = 0; i < 4; ++i) f.a[i] = a.at(i).get<std::string>();
  }
  if (j.contains("eta")) f.eta = j.at("eta").get<std::string>();
  return f;
}

}  // namespace

BranchSelector branch_from_json(const json& j) {
  if (!j.is_object() || !j.contains("branch")) {
    throw ScenarioError("branch must be an object {\"branch\": \"principal\"|\"negative\"}");
  }
  const std::string name = j.at("branch").get<std::string>();
  if (name == "principal") return BranchSelector::principal();
  if (name == "negative") return BranchSelector::negative();
  throw ScenarioError("branch must be 'principal' or 'negative', got '" + name + "'");
}

Scenario Scenario::from_json(const json& j) {
  if (!j.is_object()) throw ScenarioError("scenario root must be a JSON object");
  Scenario s;

  if (!j.contains("n")) throw ScenarioError("missing field 'n'");
  s.n = get_int(j.at("n"), "n");
  if (s.n < 1) throw ScenarioError("n must be >= 1");

  s.k = j.contains("k") ? get_int(j.at("k"), "k") : s.n;
  if (s.k > s.n) throw ScenarioError("k exceeds n");
  if (s.k < 1) throw ScenarioError("k must be >= 1");

  if (j.contains("family")) {
    s.family = FFamily::from_json(j.at("family"));
  } else if (!j.contains("table")) {
    throw ScenarioError("missing field 'family'");
  } else {
    s.family = FFamily::exponential();  // placeholder; table commands build their own F
  }
  if (j.contains("branch")) s.branch = branch_from_json(j.at("branch"));

  if (j.contains("psi")) s.psi_source = j.at("psi").get<std::string>();
  if (j.contains("w")) {
    for (const auto& e : j.at("w")) s.w_sources.push_back(e.get<std::string>());
  }
  if (static_cast<int>(s.w_sources.size()) != s.n - s.k) {
    throw ScenarioError("w must list exactly n - k = " + std::to_string(s.n - s.k) +
                        " expressions, got " + std::to_string(s.w_sources.size()));
  }

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (!g.is_object() || !g.contains("t") || !g.contains("x")) {
      throw ScenarioError("grid requires 't' and 'x'");
    }
    s.grid.t = parse_axis(g.at("t"), "grid.t");
    const auto& xs = g.at("x");
    if (!xs.is_array()) throw ScenarioError("grid.x must be an array of axes");
    for (std::size_t i = 0; i < xs.size(); ++i) {
      s.grid.x.push_back(parse_axis(xs.at(i), "grid.x[" + std::to_string(i) + "]"));
    }
    if (static_cast<int>(s.grid.x.size()) != s.n) {
      throw ScenarioError("grid.x axis count must equal n");
    }
  }

  if (j.contains("newton")) {
    const auto& nj = j.at("newton");
    if (nj.contains("tol")) s.newton.tol = get_number(nj.at("tol"), "newton.tol");
    if (nj.contains("max_iter")) s.newton.max_iter = get_int(nj.at("max_iter"), "newton.max_iter");
    if (nj.contains("jacobian_cond_max")) {
      s.newton.jacobian_cond_max = get_number(nj.at("jacobian_cond_max"), "newton.jacobian_cond_max");
    }
    if (nj.contains("random_seeds")) {
      s.newton.random_seeds = get_int(nj.at("random_seeds"), "newton.random_seeds");
    }
    if (s.newton.tol <= 0.0) throw ScenarioError("newton.tol must be > 0");
    if (s.newton.max_iter < 1) throw ScenarioError("newton.max_iter must be >= 1");
  }

  if (j.contains("seeds")) {
    const auto& seeds = j.at("seeds");
    if (!seeds.is_array()) throw ScenarioError("seeds must be an array of tau vectors");
    for (const auto& e : seeds) {
      if (!e.is_array() || static_cast<int>(e.size()) != s.k) {
        throw ScenarioError("each seed must list k = " + std::to_string(s.k) + " components");
      }
      Eigen::VectorXd v(s.k);
      for (int i = 0; i < s.k; ++i) v(i) = get_number(e.at(i), "seeds[][i]");
      s.newton.seeds.push_back(v);
    }
  }

  if (j.contains("rng_seed")) {
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  }
  s.newton.rng_seed = s.rng_seed;

  if (j.contains("table")) {
    const auto& tj = j.at("table");
    if (!tj.is_object() || !tj.contains("row")) throw ScenarioError("table requires 'row'");
    TableSelection sel;
    sel.row = get_int(tj.at("row"), "table.row");
    if (sel.row < 0 || sel.row > 12) throw ScenarioError("table.row must be in 0..12");
    if (tj.contains("samples")) sel.samples = get_int(tj.at("samples"), "table.samples");
    if (sel.samples < 1) throw ScenarioError("table.samples must be >= 1");
    if (tj.contains("tol")) sel.tol = get_number(tj.at("tol"), "table.tol");
    if (tj.contains("params")) {
      const auto& pj = tj.at("params");
      if (pj.contains("delta")) sel.params.delta = get_number(pj.at("delta"), "table.params.delta");
      if (pj.contains("beta")) sel.params.beta = get_number(pj.at("beta"), "table.params.beta");
      if (pj.contains("eps1")) sel.params.eps1 = get_int(pj.at("eps1"), "table.params.eps1");
      if (pj.contains("eps2")) sel.params.eps2 = get_int(pj.at("eps2"), "table.params.eps2");
      if (pj.contains("sign")) sel.params.sign11 = get_int(pj.at("sign"), "table.params.sign");
      if (pj.contains("h")) sel.params.h = pj.at("h").get<std::string>();
      if (pj.contains("f")) sel.params.f = pj.at("f").get<std::string>();
      if (pj.contains("f0")) sel.params.f0 = pj.at("f0").get<std::string>();
      if (pj.contains("row7")) sel.params.row7 = parse_row7(pj.at("row7"));
    }
    if (tj.contains("row7_choices")) {
      for (const auto& e : tj.at("row7_choices")) {
        sel.row7_choices.push_back(parse_row7(e));
      }
    }
    s.table = sel;
  }

  return s;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw ScenarioError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ScenarioError("scenario is not valid JSON: " + std::string(e.what()));
  }
  return from_json(j);
}

ImplicitSolution Scenario::build_solution() const {
  try {
    return ImplicitSolution(n, k, family, branch, PsiFunction(psi_source, k),
                            WFunctions(w_sources, k));
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError(e.what());
  }
}

}  // namespace meik
