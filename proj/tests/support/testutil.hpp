#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace meik::test {

/// Deterministic PRNG independent of the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t bits() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  int below(int n) { return static_cast<int>(bits() % static_cast<std::uint64_t>(n)); }

  double gaussian() {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Eigen::VectorXd unit_vector(int n) {
    Eigen::VectorXd v(n);
    do {
      for (int i = 0; i < n; ++i) v(i) = gaussian();
    } while (v.norm() == 0.0);
    return v / v.norm();
  }

 private:
  std::uint64_t state_;
};

using RealFn = std::function<double(const Eigen::VectorXd&)>;

/// Central-difference gradient, step max(1,|x_i|) * eps^(1/3).
inline Eigen::VectorXd fd_gradient(const RealFn& f, const Eigen::VectorXd& x) {
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  const int d = static_cast<int>(x.size());
  Eigen::VectorXd g(d);
  for (int i = 0; i < d; ++i) {
    const double h = std::max(1.0, std::abs(x(i))) * base;
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Central-difference Hessian, step max(1,|x_i|) * eps^(1/4).
inline Eigen::MatrixXd fd_hessian(const RealFn& f, const Eigen::VectorXd& x) {
  const double base = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  const int d = static_cast<int>(x.size());
  const double f0 = f(x);
  Eigen::MatrixXd h(d, d);
  for (int i = 0; i < d; ++i) {
    const double hi = std::max(1.0, std::abs(x(i))) * base;
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += hi;
    xm(i) -= hi;
    h(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (hi * hi);
    for (int j = i + 1; j < d; ++j) {
      const double hj = std::max(1.0, std::abs(x(j))) * base;
      Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
      xpp(i) += hi; xpp(j) += hj;
      xpm(i) += hi; xpm(j) -= hj;
      xmp(i) -= hi; xmp(j) += hj;
      xmm(i) -= hi; xmm(j) -= hj;
      const double v = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * hi * hj);
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  return h;
}

/// Random polynomial source of total degree <= max_degree in the given
/// variables, written in expression syntax.
inline std::string random_polynomial(Rng& rng, const std::vector<std::string>& vars,
                                     int max_degree) {
  const int terms = 1 + rng.below(6);
  std::string out;
  for (int t = 0; t < terms; ++t) {
    double coeff = std::round(rng.uniform(-4.0, 4.0) * 16.0) / 16.0;
    if (coeff == 0.0) coeff = 1.0;
    std::string term = std::to_string(coeff);
    int degree_left = rng.below(max_degree + 1);
    for (const auto& v : vars) {
      if (degree_left <= 0) break;
      const int p = rng.below(degree_left + 1);
      if (p == 0) continue;
      degree_left -= p;
      term += "*" + v;
      if (p > 1) term += "^" + std::to_string(p);
    }
    if (t) out += " + ";
    out += term;
  }
  return out;
}

}  // namespace meik::test
