#pragma once

// Independent reference computations shared by the tests.

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>

#include "ggpfr/family.hpp"
#include "ggpfr/random.hpp"
#include "ggpfr/types.hpp"

namespace oracle {

using ggpfr::Index;
using ggpfr::Matrix;
using ggpfr::Vector;

constexpr double kPi = 3.14159265358979323846;

inline double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * kPi); }

inline double std_normal_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<double>(), x); }

// Adaptive Gauss-Kronrod on [lo, hi].
inline double integrate(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-13) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 20, tol);
}

// E f(T), T ~ N(m, v).
inline double normal_expectation(const std::function<double(double)>& f, double m, double v) {
  const double s = std::sqrt(v);
  double total = 0.0;
  // Split the whitened range so each panel stays smooth.
  for (double a = -14.0; a < 14.0; a += 4.0)
    total += integrate([&](double x) { return f(m + s * x) * std_normal_pdf(x); }, a, a + 4.0);
  return total;
}

// log int prod_i p(z_i | mu_i + tau_i) N(tau; 0, C) dtau for N <= 2, by
// nested adaptive quadrature in whitened coordinates tau = L g.
inline double log_marginal(const Vector& z, const Vector& mu, const Matrix& C, const ggpfr::ObservationFamily& fam) {
  const Matrix L = C.llt().matrixL();
  auto lik = [&](Index i, double eta) { return std::exp(ggpfr::log_density(fam, z(i), eta)); };
  if (z.size() == 1) {
    return std::log(integrate([&](double g) { return lik(0, mu(0) + L(0, 0) * g) * std_normal_pdf(g); }, -12, 12,
                              1e-14));
  }
  auto inner = [&](double g1) {
    const double t1 = L(0, 0) * g1;
    return integrate(
        [&](double g2) {
          const double t2 = L(1, 0) * g1 + L(1, 1) * g2;
          return lik(0, mu(0) + t1) * lik(1, mu(1) + t2) * std_normal_pdf(g2);
        },
        -12, 12, 1e-12);
  };
  return std::log(integrate([&](double g1) { return inner(g1) * std_normal_pdf(g1); }, -12, 12, 1e-11));
}

// log N(z; mu, S).
inline double log_gaussian(const Vector& z, const Vector& mu, const Matrix& S) {
  Eigen::LDLT<Matrix> ldlt(S);
  const Vector r = z - mu;
  double log_det = 0.0;
  for (Index i = 0; i < S.rows(); ++i) log_det += std::log(ldlt.vectorD()(i));
  return -0.5 * (static_cast<double>(z.size()) * std::log(2 * kPi) + log_det + r.dot(ldlt.solve(r)));
}

inline Matrix random_spd(Index n, ggpfr::Rng& rng, double scale = 1.0) {
  Matrix A(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) A(i, j) = rng.normal();
  Matrix S = A * A.transpose() / static_cast<double>(n);
  S.diagonal().array() += 0.1;
  return scale * S;
}

inline Vector random_vector(Index n, ggpfr::Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

inline double uniform(ggpfr::Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace oracle
