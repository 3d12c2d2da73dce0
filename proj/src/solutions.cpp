#include "meik/solutions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace meik {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform in [0, 1); derived from raw bits so results are identical on every
// platform for a given seed.
double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

double condition_number(const Eigen::MatrixXd& J) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (smin == 0.0) return kInf;
  return smax / smin;
}

}  // namespace

LinearSolution linear_solution(const FFamily& F, double c0,
                               const Eigen::VectorXd& direction, double c_const) {
  if (F.is_general()) {
    throw DomainError("linear solutions are defined for F(u_t) families only");
  }
  if (std::abs(direction.norm() - 1.0) > 1e-9) {
    throw Error("direction must be a unit vector");
  }
  const auto [f, fd] = F.f_eval(c0);
  (void)fd;
  if (f < 0.0) {
    throw NegativeF("F(c0) = " + std::to_string(f) +
                    " < 0: no real linear solution for family " + F.describe());
  }
  LinearSolution sol;
  sol.c0 = c0;
  sol.c = std::sqrt(f) * direction;
  sol.c_const = c_const;
  return sol;
}

ImplicitSolution::ImplicitSolution(int n, int k, FFamily F, BranchSelector branch,
                                   PsiFunction psi, WFunctions w)
    : n_(n), k_(k), family_(std::move(F)), psi_(std::move(psi)), w_(std::move(w)) {
  if (n_ < 1) throw Error("space dimension n must be >= 1");
  if (k_ < 1 || k_ > n_) throw Error("parameter count k must satisfy 1 <= k <= n");
  if (family_.is_general()) {
    throw Error("solution constructors accept F(u_t) families only, not general F(t,u,u_t)");
  }
  if (psi_.arity() != k_) {
    throw Error("psi arity " + std::to_string(psi_.arity()) +
                " does not match k = " + std::to_string(k_));
  }
  if (w_.count() != n_ - k_) {
    throw Error("expected " + std::to_string(n_ - k_) + " w functions, got " +
                std::to_string(w_.count()));
  }
  if (w_.count() > 0 && w_.arity() != k_) {
    throw Error("w functions must depend on tau_1..tau_k");
  }
  branch_ = family_.branch(branch);
}

double ImplicitSolution::sigma_of(const Eigen::VectorXd& tau) const {
  double sigma = tau.squaredNorm();
  std::span<const double> ts(tau.data(), static_cast<std::size_t>(tau.size()));
  for (int m = 0; m < w_.count(); ++m) {
    const double wm = w_.value(m, ts);
    sigma += wm * wm;
  }
  return sigma;
}

Stationarity ImplicitSolution::stationarity(double t, const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& tau) const {
  std::span<const double> ts(tau.data(), static_cast<std::size_t>(tau.size()));
  const Dual2 psi = psi_.jet2(ts);

  std::vector<Dual2> w;
  w.reserve(w_.count());
  double sigma = tau.squaredNorm();
  for (int m = 0; m < w_.count(); ++m) {
    w.push_back(w_.jet2(m, ts));
    sigma += w.back().value * w.back().value;
  }

  // dsigma/dtau and its Jacobian, with the chain rule through w_m(tau).
  Eigen::VectorXd s = 2.0 * tau;
  Eigen::MatrixXd ds = 2.0 * Eigen::MatrixXd::Identity(k_, k_);
  for (const Dual2& wm : w) {
    s += 2.0 * wm.value * wm.grad;
    ds += 2.0 * (wm.grad * wm.grad.transpose() + wm.value * wm.hess);
  }

  Stationarity st;
  st.sigma = sigma;
  st.G = x.head(k_) - psi.grad;
  st.J = -psi.hess;
  for (int m = 0; m < w_.count(); ++m) {
    st.G -= w[m].grad * x(k_ + m);
    st.J -= w[m].hess * x(k_ + m);
  }
  if (t != 0.0) {
    const Jet2 phi = family_.phi_jet2(branch_, sigma);
    st.G -= t * phi.d1 * s;
    st.J -= t * (phi.d2 * (s * s.transpose()) + phi.d1 * ds);
  }
  return st;
}

double ImplicitSolution::u_of(double t, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& tau) const {
  std::span<const double> ts(tau.data(), static_cast<std::size_t>(tau.size()));
  double u = -x.head(k_).dot(tau) + psi_.value(ts);
  double sigma = tau.squaredNorm();
  for (int m = 0; m < w_.count(); ++m) {
    const double wm = w_.value(m, ts);
    sigma += wm * wm;
    u += wm * x(k_ + m);
  }
  if (t != 0.0) {
    u += t * family_.phi_jet2(branch_, sigma).v;
  }
  return u;
}

std::optional<Root> ImplicitSolution::newton_from(double t, const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& seed,
                                                  const NewtonConfig& cfg,
                                                  SeedFail* why) const {
  auto fail = [&](SeedFail f) -> std::optional<Root> {
    if (why) *why = f;
    return std::nullopt;
  };
  if (seed.size() != k_) throw Error("seed dimension must equal k");

  Eigen::VectorXd tau = seed;
  Stationarity st;
  try {
    st = stationarity(t, x, tau);
  } catch (const DomainError&) {
    return fail(SeedFail::Domain);
  }
  if (!st.G.allFinite()) return fail(SeedFail::NoConverge);

  for (int it = 0; it <= cfg.max_iter; ++it) {
    if (st.G.lpNorm<Eigen::Infinity>() <= cfg.tol) {
      const double cond = condition_number(st.J);
      if (cond > cfg.jacobian_cond_max) return fail(SeedFail::Singular);
      Root r;
      r.tau = tau;
      r.sigma = st.sigma;
      r.iterations = it;
      r.converged = true;
      r.jacobian_cond = cond;
      r.u = u_of(t, x, tau);
      return r;
    }
    if (it == cfg.max_iter) break;

    const double cond = condition_number(st.J);
    if (cond > cfg.jacobian_cond_max) return fail(SeedFail::Singular);

    const Eigen::VectorXd step = st.J.partialPivLu().solve(-st.G);
    if (!step.allFinite()) return fail(SeedFail::NoConverge);

    const double g0 = st.G.norm();
    double alpha = 1.0;
    bool accepted = false;
    bool all_domain = true;
    for (int h = 0; h <= cfg.max_halvings; ++h) {
      const Eigen::VectorXd cand = tau + alpha * step;
      try {
        Stationarity st2 = stationarity(t, x, cand);
        all_domain = false;
        if (st2.G.allFinite() && st2.G.norm() <= (1.0 - 1e-4 * alpha) * g0) {
          tau = cand;
          st = std::move(st2);
          accepted = true;
          break;
        }
      } catch (const DomainError&) {
        // step left the branch domain; shrink
      }
      alpha *= cfg.backtrack_factor;
    }
    if (!accepted) {
      return fail(all_domain ? SeedFail::Domain : SeedFail::NoConverge);
    }
  }
  return fail(SeedFail::NoConverge);
}

std::vector<Eigen::VectorXd> ImplicitSolution::seed_set(double t, const Eigen::VectorXd& x,
                                                        const NewtonConfig& cfg) const {
  std::vector<Eigen::VectorXd> seeds;
  const Eigen::VectorXd x_slice = x.head(k_);

  std::optional<Root> t0;
  if (cfg.use_default_seeds) {
    // The t = 0 system drops Phi entirely; for convex Psi it is well posed.
    NewtonConfig aux = cfg;
    aux.seeds.clear();
    aux.use_default_seeds = false;
    SeedFail why;
    t0 = newton_from(0.0, x, x_slice, aux, &why);
    if (t0) {
      seeds.push_back(t0->tau);
      // Contractions toward the origin widen the basin coverage for folded
      // sheets without any randomness.
      seeds.push_back(0.25 * t0->tau);
      seeds.push_back(0.0625 * t0->tau);
    }
    seeds.push_back(x_slice);
  }

  for (const auto& s : cfg.seeds) {
    if (s.size() != k_) throw Error("user seed dimension must equal k");
    seeds.push_back(s);
  }

  if (cfg.use_default_seeds && cfg.random_seeds > 0) {
    const Eigen::VectorXd base = t0 ? t0->tau : x_slice;
    const double scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
    std::uint64_t state = cfg.rng_seed ^ 0xa02bdbf7bb3c0a7ULL;
    for (int i = 0; i < cfg.random_seeds; ++i) {
      Eigen::VectorXd s(k_);
      for (int j = 0; j < k_; ++j) {
        s(j) = base(j) + scale * (2.0 * uniform01(state) - 1.0);
      }
      seeds.push_back(s);
    }
  }
  (void)t;
  return seeds;
}

EvalResult ImplicitSolution::evaluate(double t, const Eigen::VectorXd& x,
                                      const NewtonConfig& cfg) const {
  if (x.size() != n_) throw Error("point dimension must equal n");
  const std::vector<Eigen::VectorXd> seeds = seed_set(t, x, cfg);
  if (seeds.empty()) throw Error("newton config produced an empty seed set");

  EvalResult result;
  result.seeds_tried = static_cast<int>(seeds.size());
  for (const auto& seed : seeds) {
    SeedFail why = SeedFail::None;
    if (auto root = newton_from(t, x, seed, cfg, &why)) {
      bool duplicate = false;
      for (const Root& r : result.roots) {
        if ((r.tau - root->tau).lpNorm<Eigen::Infinity>() <= 1e-8) {
          duplicate = true;
          break;
        }
      }
      if (!duplicate) result.roots.push_back(std::move(*root));
    } else {
      switch (why) {
        case SeedFail::Domain: ++result.seeds_domain_error; break;
        case SeedFail::Singular: ++result.seeds_singular; break;
        default: ++result.seeds_no_converge; break;
      }
    }
  }

  std::sort(result.roots.begin(), result.roots.end(), [](const Root& a, const Root& b) {
    if (a.u != b.u) return a.u < b.u;
    return std::lexicographical_compare(a.tau.data(), a.tau.data() + a.tau.size(),
                                        b.tau.data(), b.tau.data() + b.tau.size());
  });

  if (result.roots.empty()) {
    if (result.seeds_singular > 0) {
      throw SingularJacobian(
          "all seeds aborted; Jacobian condition exceeded bound (caustic proximity)");
    }
    if (result.seeds_domain_error == result.seeds_tried) {
      throw DomainError("every Newton seed left the inverse-branch domain");
    }
    throw NoRoot("no Newton seed converged for the stationarity system");
  }
  return result;
}

JetPoint ImplicitSolution::jet_closed_form(double t, const Eigen::VectorXd& x,
                                           const Root& root) const {
  JetPoint jet;
  jet.t = t;
  jet.x = x;
  jet.u = root.u;
  jet.u_x.resize(n_);
  jet.u_x.head(k_) = -root.tau;
  std::span<const double> ts(root.tau.data(), static_cast<std::size_t>(root.tau.size()));
  for (int m = 0; m < w_.count(); ++m) {
    jet.u_x(k_ + m) = w_.value(m, ts);
  }
  jet.u_t = family_.phi_jet2(branch_, root.sigma).v;
  return jet;
}

}  // namespace meik
