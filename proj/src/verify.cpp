#include "meik/verify.hpp"

#include <cmath>
#include <limits>

namespace meik {

namespace {

const double kEps = std::numeric_limits<double>::epsilon();
const double kStepJet = std::cbrt(kEps);
const double kStepHess = std::pow(kEps, 0.25);

double scaled_step(double coord, double base) {
  return std::max(1.0, std::abs(coord)) * base;
}

double call_field(const ScalarField& field, double t, const Eigen::VectorXd& x) {
  try {
    return field(t, x);
  } catch (const BranchJump&) {
    throw;
  } catch (const Error& e) {
    throw EvalFailure(std::string("field evaluation failed: ") + e.what());
  }
}

}  // namespace

JetPoint fd_jet(const ScalarField& field, double t, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  JetPoint jet;
  jet.t = t;
  jet.x = x;
  jet.u = call_field(field, t, x);
  jet.u_x.resize(n);

  const double ht = scaled_step(t, kStepJet);
  jet.u_t = (call_field(field, t + ht, x) - call_field(field, t - ht, x)) / (2.0 * ht);
  for (int i = 0; i < n; ++i) {
    const double h = scaled_step(x(i), kStepJet);
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    jet.u_x(i) = (call_field(field, t, xp) - call_field(field, t, xm)) / (2.0 * h);
  }
  return jet;
}

double residual(const FFamily& F, const JetPoint& jet) {
  const GeneralJet g = F.general_eval(jet.t, jet.u, jet.u_t);
  return jet.u_x.squaredNorm() - g.f;
}

std::pair<int, Eigen::VectorXd> hessian_rank(const ScalarField& field, double t,
                                             const Eigen::VectorXd& x, double tol_rel) {
  const int n = static_cast<int>(x.size());
  const double u0 = call_field(field, t, x);
  Eigen::VectorXd h(n);
  for (int i = 0; i < n; ++i) h(i) = scaled_step(x(i), kStepHess);

  Eigen::MatrixXd H(n, n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h(i);
    xm(i) -= h(i);
    H(i, i) = (call_field(field, t, xp) - 2.0 * u0 + call_field(field, t, xm)) /
              (h(i) * h(i));
    for (int j = i + 1; j < n; ++j) {
      Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
      xpp(i) += h(i); xpp(j) += h(j);
      xpm(i) += h(i); xpm(j) -= h(j);
      xmp(i) -= h(i); xmp(j) += h(j);
      xmm(i) -= h(i); xmm(j) -= h(j);
      const double v = (call_field(field, t, xpp) - call_field(field, t, xpm) -
                        call_field(field, t, xmp) + call_field(field, t, xmm)) /
                       (4.0 * h(i) * h(j));
      H(i, j) = v;
      H(j, i) = v;
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(H);
  Eigen::VectorXd sv = svd.singularValues();
  // Relative threshold with an absolute floor, so the zero matrix has rank 0.
  const double threshold = tol_rel * std::max(sv.size() > 0 ? sv(0) : 0.0, 1.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > threshold) ++rank;
  }
  return {rank, std::move(sv)};
}

SheetTracker::SheetTracker(const ImplicitSolution& sol, NewtonConfig cfg, double t0,
                           Eigen::VectorXd x0, Root center)
    : sol_(&sol), cfg_(std::move(cfg)), t0_(t0), x0_(std::move(x0)),
      center_(std::move(center)) {
  cfg_.seeds.clear();
  cfg_.use_default_seeds = false;
  const Stationarity st = sol_->stationarity(t0_, x0_, center_.tau);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(st.J);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  inv_jacobian_norm_ = smin > 0.0 ? 1.0 / smin : std::numeric_limits<double>::infinity();
}

Root SheetTracker::track(double t, const Eigen::VectorXd& x) const {
  ImplicitSolution::SeedFail why;
  auto root = sol_->newton_from(t, x, center_.tau, cfg_, &why);
  if (!root) {
    if (why == ImplicitSolution::SeedFail::Domain) {
      throw EvalFailure("sheet evaluation left the inverse-branch domain");
    }
    throw BranchJump("Newton did not converge from the sheet's center root");
  }
  const double dt = t - t0_;
  const double dist = std::sqrt((x - x0_).squaredNorm() + dt * dt);
  if (dist > 0.0) {
    const double bound = 10.0 * (2.0 * dist) * inv_jacobian_norm_;
    if ((root->tau - center_.tau).lpNorm<Eigen::Infinity>() > bound) {
      throw BranchJump("tracked root drifted off the envelope sheet");
    }
  }
  return *root;
}

double SheetTracker::operator()(double t, const Eigen::VectorXd& x) const {
  return track(t, x).u;
}

ResidualReport verify_root(const ImplicitSolution& sol, const NewtonConfig& cfg,
                           double t, const Eigen::VectorXd& x, const Root& root) {
  ResidualReport report;
  report.point = sol.jet_closed_form(t, x, root);
  report.residual_closed = std::abs(residual(sol.family(), report.point));

  SheetTracker tracker(sol, cfg, t, x, root);
  const JetPoint fd = fd_jet(tracker.field(), t, x);
  report.residual_fd = std::abs(residual(sol.family(), fd));

  double mismatch = std::abs(report.point.u_t - fd.u_t);
  mismatch = std::max(mismatch, (report.point.u_x - fd.u_x).lpNorm<Eigen::Infinity>());
  report.jet_mismatch = mismatch;

  auto [rank, sv] = hessian_rank(tracker.field(), t, x);
  report.hessian_rank = rank;
  report.singular_values = std::move(sv);
  return report;
}

}  // namespace meik
