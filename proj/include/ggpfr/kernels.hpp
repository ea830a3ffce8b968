#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "ggpfr/errors.hpp"
#include "ggpfr/types.hpp"

namespace ggpfr {

// Covariance families. Log-parameter layouts:
//   SE_LINEAR           (log w_1..log w_Q, log v, log a)
//     k = v exp(-1/2 sum_q w_q (x_q - x'_q)^2) + a sum_q x_q x'_q
//   MATERN32            (log l, log s2)
//     k = s2 (1 + sqrt(3) r / l) exp(-sqrt(3) r / l)
//   RATIONAL_QUADRATIC  (log l, log s2, log alpha)
//     k = s2 (1 + r^2 / (2 alpha l^2))^(-alpha)
//   PIECEWISE_POLY_Q2   (log l, log s2)
//     k = s2 max(0, 1 - r/l)^(j+2) ((j^2+4j+3)(r/l)^2 + (3j+6)(r/l) + 3) / 3,
//     j = floor(Q/2) + 3
// with r the Euclidean distance between inputs.
enum class KernelKind { se_linear, matern32, rational_quadratic, piecewise_poly_q2 };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);
Index kernel_param_count(KernelKind kind, Index input_dim);

struct KernelParams {
  KernelKind kind = KernelKind::se_linear;
  Index input_dim = 1;
  Vector log_params;

  static KernelParams se_linear(const Vector& w, double v, double a);
  static KernelParams matern32(Index input_dim, double length_scale, double variance);
  static KernelParams rational_quadratic(Index input_dim, double length_scale, double variance, double alpha);
  static KernelParams piecewise_poly_q2(Index input_dim, double length_scale, double variance);
  // Unit-scale starting point for the kind.
  static KernelParams defaults(KernelKind kind, Index input_dim);

  Index size() const { return log_params.size(); }
  Vector values() const { return log_params.array().exp().matrix(); }
  // Throws unless the parameter count matches and exp(log_params) is positive and finite.
  void check() const;
};

namespace detail {

inline double pp_q2_profile(double r, Index input_dim) {
  if (r >= 1.0) return 0.0;
  const double j = static_cast<double>(input_dim / 2 + 3);
  const double one_minus = 1.0 - r;
  return std::pow(one_minus, j + 2) * ((j * j + 4 * j + 3) * r * r + (3 * j + 6) * r + 3) / 3.0;
}

inline double pp_q2_profile_deriv(double r, Index input_dim) {
  if (r >= 1.0) return 0.0;
  const double j = static_cast<double>(input_dim / 2 + 3);
  const double a = j * j + 4 * j + 3, b = 3 * j + 6;
  const double one_minus = 1.0 - r;
  const double poly = (a * r * r + b * r + 3) / 3.0;
  return -(j + 2) * std::pow(one_minus, j + 1) * poly + std::pow(one_minus, j + 2) * (2 * a * r + b) / 3.0;
}

}  // namespace detail

template <typename DerivedA, typename DerivedB>
double kernel_eval(const Eigen::MatrixBase<DerivedA>& xi, const Eigen::MatrixBase<DerivedB>& xj,
                   const KernelParams& params) {
  const Index q = params.input_dim;
  if (xi.size() != q || xj.size() != q)
    fail(ErrorClass::dimension, "kernel_eval: input dimension does not match the kernel");
  const auto& lp = params.log_params;
  switch (params.kind) {
    case KernelKind::se_linear: {
      double quad = 0.0, lin = 0.0;
      for (Index k = 0; k < q; ++k) {
        const double d = xi(k) - xj(k);
        quad += std::exp(lp(k)) * d * d;
        lin += xi(k) * xj(k);
      }
      return std::exp(lp(q)) * std::exp(-0.5 * quad) + std::exp(lp(q + 1)) * lin;
    }
    case KernelKind::matern32: {
      const double s = std::sqrt(3.0) * (xi - xj).norm() / std::exp(lp(0));
      return std::exp(lp(1)) * (1.0 + s) * std::exp(-s);
    }
    case KernelKind::rational_quadratic: {
      const double alpha = std::exp(lp(2));
      const double r2 = (xi - xj).squaredNorm() / std::exp(2.0 * lp(0));
      return std::exp(lp(1)) * std::pow(1.0 + r2 / (2.0 * alpha), -alpha);
    }
    case KernelKind::piecewise_poly_q2: {
      const double r = (xi - xj).norm() / std::exp(lp(0));
      return std::exp(lp(1)) * detail::pp_q2_profile(r, q);
    }
  }
  return 0.0;
}

// C_ij = k(x_i, x_j) + jitter * delta_ij over the rows of X.
Matrix gram_matrix(const Matrix& X, const KernelParams& params, double jitter = 0.0);

// dC / d log_params[k] for every log-parameter k (no jitter dependence).
std::vector<Matrix> gram_grad(const Matrix& X, const KernelParams& params);

// Entry i is k(x_i, x_star).
Vector cross_cov(const Matrix& X, const Vector& x_star, const KernelParams& params);

inline constexpr double kDefaultJitter = 1e-6;
inline constexpr double kMaxJitter = 1e-2;

// Adds jitter to the diagonal of `cov`, escalating x10 from `jitter` up to
// kMaxJitter until the Cholesky factorization succeeds; throws a conditioning
// error otherwise. Returns the jittered matrix and its factor.
struct GramFactor {
  Matrix matrix;
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};
GramFactor factorize_with_jitter(const Matrix& cov, double jitter = kDefaultJitter);

}  // namespace ggpfr
