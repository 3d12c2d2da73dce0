#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "meik/funcs.hpp"
#include "meik/jet.hpp"
#include "meik/verify.hpp"

namespace meik {

/// Point-symmetry generator X = xi_t d/dt + xi_a d/dx_a + eta d/du, with
/// coefficients given as expressions in (t, x1..xn, u).
struct VectorField {
  std::string id;
  Expr xi_t;
  std::vector<Expr> xi_x;
  Expr eta;

  int n() const { return static_cast<int>(xi_x.size()); }

  /// Variable names for coefficient expressions at dimension n.
  static std::vector<std::string> coefficient_vars(int n);

  /// Build from coefficient sources ("0" for absent components).
  static VectorField from_sources(const std::string& id, int n,
                                  const std::string& xi_t,
                                  const std::vector<std::string>& xi_x,
                                  const std::string& eta);

  nlohmann::json to_json() const;
  static VectorField from_json(const nlohmann::json& j, int n);
};

/// First prolongation coefficients eta^(1) at a jet.
struct Prolongation1 {
  double eta1_t = 0.0;
  Eigen::VectorXd eta1_x;
};

/// eta^(1)_mu = D_mu eta - u_nu D_mu xi^nu with D_mu f = f_mu + u_mu f_u.
Prolongation1 prolong1(const VectorField& X, const JetPoint& jet);

/// |2 u_a eta1_a - F_ut eta1_t - F_t xi_t - F_u eta| at an on-manifold jet;
/// zero iff X generates a symmetry of u_a u_a = F(t,u,u_t) there.
double symmetry_defect(const VectorField& X, const FFamily& F, const JetPoint& jet);

struct SamplerRanges {
  double t_min = 0.3, t_max = 1.5;
  double x_min = -2.0, x_max = 2.0;
  double u_min = 0.4, u_max = 1.7;
  double ut_min = -1.5, ut_max = 1.5;
};

/// Draws jets lying exactly on u_x.u_x = F(t,u,u_t): u_x is sqrt(F) times a
/// random unit vector; draws with F < 0 are rejected. Owns a seeded generator
/// so runs are reproducible.
class OnManifoldSampler {
 public:
  OnManifoldSampler(FFamily F, int n, SamplerRanges ranges, std::uint64_t seed);
  JetPoint sample();

 private:
  FFamily family_;
  int n_;
  SamplerRanges ranges_;
  std::uint64_t state_;
};

/// Row 7's arbitrary smooth functions of u (sources in the variable "u").
/// b is given by its strictly upper triangular entries (mu < kappa) and is
/// extended antisymmetrically.
struct Row7Functions {
  std::array<std::string, 4> c = {"0", "0", "0", "0"};
  std::map<std::pair<int, int>, std::string> b;
  std::string d = "0";
  std::array<std::string, 4> a = {"0", "0", "0", "0"};
  std::string eta = "0";
};

/// Instantiation parameters for the classification rows.
struct TableParams {
  double delta = 1.0;                       // rows 1, 3
  double beta = 3.0;                        // row 6
  int eps1 = 1, eps2 = 1;                   // rows 8, 9
  int sign11 = +1;                          // row 11
  std::string h = "exp(u_t)+u_t^2+3";       // rows 2, 3, 4
  std::string f = "exp(u_t)+u^2+1";         // row 1
  std::string f0 = "exp(u_t)+t^2+u^2+1";    // row 0
  Row7Functions row7;
};

/// One row of the classification: its F and its basis generators.
struct TableRow {
  int row_id = 0;
  int n = 0;
  FFamily F;
  std::vector<VectorField> generators;
  SamplerRanges ranges;
};

/// Build a classification row with validated parameters. Row 7 requires n = 3.
TableRow make_table_row(int row, int n, const TableParams& params = {});

/// Canonical row-7 function choices used for verification (constants, u^2, mixed).
std::vector<Row7Functions> row7_default_choices();

/// Fields that are not symmetries of any row here; used as negative controls.
std::vector<VectorField> negative_controls(int n);

struct GeneratorReport {
  std::string id;
  double max_defect = 0.0;
  int samples = 0;
};

struct TableReport {
  int row_id = 0;
  double tol = 0.0;
  std::vector<GeneratorReport> generators;
  bool pass = false;
};

/// Max defect per generator over `samples` on-manifold jets; per-generator
/// sub-seeds derive deterministically from `seed`.
TableReport verify_table(const TableRow& row, int samples, double tol,
                         std::uint64_t seed);

/// Closed-form flow of a generator whose coefficients are affine in
/// (t, x, u) and whose xi components do not involve u, so pushing the graph
/// of a solution through exp(eps X) is an affine change of base point plus an
/// affine adjustment of u.
class AffineFlow {
 public:
  AffineFlow(const VectorField& X, double eps);

  int n() const { return n_; }
  double eps() const { return eps_; }

  /// Pre-image of (t, x) under the base-point flow.
  std::pair<double, Eigen::VectorXd> backward_base(double t, const Eigen::VectorXd& x) const;

  /// Value of the transformed field at the point whose pre-image carries u0.
  double push_value(double t0, const Eigen::VectorXd& x0, double u0) const;

  /// Transformed field: u'(t,x) = push(backward(t,x), u(backward(t,x))).
  ScalarField transform(ScalarField field) const;

  /// First-order jet of the transformed field at (t, x), given the source
  /// jet at the pre-image.
  JetPoint push_jet(const JetPoint& source, double t, const Eigen::VectorXd& x) const;

  /// Homogeneous forward matrix on (t, x, u, 1); exposed for group-law checks.
  const Eigen::MatrixXd& forward_matrix() const { return forward_; }

 private:
  int n_ = 0;
  double eps_ = 0.0;
  Eigen::MatrixXd forward_;        // (n+3) x (n+3) on (t, x, u, 1)
  Eigen::MatrixXd backward_base_;  // (n+2) x (n+2) on (t, x, 1)
};

/// Scaling-and-squaring Taylor matrix exponential for small dense matrices.
Eigen::MatrixXd expm_small(const Eigen::MatrixXd& a);

}  // namespace meik
