#include "ggpfr/kernels.hpp"

namespace ggpfr {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::se_linear: return "SE_LINEAR";
    case KernelKind::matern32: return "MATERN32";
    case KernelKind::rational_quadratic: return "RATIONAL_QUADRATIC";
    case KernelKind::piecewise_poly_q2: return "PIECEWISE_POLY_Q2";
  }
  return "UNKNOWN";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  for (auto kind : {KernelKind::se_linear, KernelKind::matern32, KernelKind::rational_quadratic,
                    KernelKind::piecewise_poly_q2})
    if (to_string(kind) == name) return kind;
  if (name == "SE") return KernelKind::se_linear;
  if (name == "MC") return KernelKind::matern32;
  if (name == "RQ") return KernelKind::rational_quadratic;
  if (name == "PP") return KernelKind::piecewise_poly_q2;
  fail(ErrorClass::schema, "unknown kernel kind '" + name + "'");
}

Index kernel_param_count(KernelKind kind, Index input_dim) {
  switch (kind) {
    case KernelKind::se_linear: return input_dim + 2;
    case KernelKind::matern32: return 2;
    case KernelKind::rational_quadratic: return 3;
    case KernelKind::piecewise_poly_q2: return 2;
  }
  return 0;
}

KernelParams KernelParams::se_linear(const Vector& w, double v, double a) {
  KernelParams p;
  p.kind = KernelKind::se_linear;
  p.input_dim = w.size();
  p.log_params.resize(w.size() + 2);
  p.log_params.head(w.size()) = w.array().log().matrix();
  p.log_params(w.size()) = std::log(v);
  p.log_params(w.size() + 1) = std::log(a);
  p.check();
  return p;
}

KernelParams KernelParams::matern32(Index input_dim, double length_scale, double variance) {
  KernelParams p;
  p.kind = KernelKind::matern32;
  p.input_dim = input_dim;
  p.log_params = Vector{{std::log(length_scale), std::log(variance)}};
  p.check();
  return p;
}

KernelParams KernelParams::rational_quadratic(Index input_dim, double length_scale, double variance, double alpha) {
  KernelParams p;
  p.kind = KernelKind::rational_quadratic;
  p.input_dim = input_dim;
  p.log_params = Vector{{std::log(length_scale), std::log(variance), std::log(alpha)}};
  p.check();
  return p;
}

KernelParams KernelParams::piecewise_poly_q2(Index input_dim, double length_scale, double variance) {
  KernelParams p;
  p.kind = KernelKind::piecewise_poly_q2;
  p.input_dim = input_dim;
  p.log_params = Vector{{std::log(length_scale), std::log(variance)}};
  p.check();
  return p;
}

KernelParams KernelParams::defaults(KernelKind kind, Index input_dim) {
  KernelParams p;
  p.kind = kind;
  p.input_dim = input_dim;
  p.log_params = Vector::Zero(kernel_param_count(kind, input_dim));
  return p;
}

void KernelParams::check() const {
  if (input_dim < 1) fail(ErrorClass::invalid_argument, "kernel input dimension must be positive");
  if (log_params.size() != kernel_param_count(kind, input_dim))
    fail(ErrorClass::invalid_argument, "kernel parameter count does not match " + to_string(kind));
  const Vector v = values();
  if (!v.allFinite() || (v.array() <= 0).any())
    fail(ErrorClass::invalid_argument, "kernel parameters must be positive and finite");
}

Matrix gram_matrix(const Matrix& X, const KernelParams& params, double jitter) {
  if (X.cols() != params.input_dim) fail(ErrorClass::dimension, "gram_matrix: covariate dimension mismatch");
  const Index n = X.rows();
  Matrix C(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < i; ++j) C(i, j) = C(j, i) = kernel_eval(X.row(i), X.row(j), params);
    C(i, i) = kernel_eval(X.row(i), X.row(i), params) + jitter;
  }
  return C;
}

std::vector<Matrix> gram_grad(const Matrix& X, const KernelParams& params) {
  const Index n = X.rows(), q = params.input_dim;
  if (X.cols() != q) fail(ErrorClass::dimension, "gram_grad: covariate dimension mismatch");
  const Index np = params.size();
  std::vector<Matrix> grads(static_cast<std::size_t>(np), Matrix::Zero(n, n));
  const auto& lp = params.log_params;
  auto set = [&](Index k, Index i, Index j, double value) {
    grads[static_cast<std::size_t>(k)](i, j) = value;
    grads[static_cast<std::size_t>(k)](j, i) = value;
  };
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      const auto xi = X.row(i), xj = X.row(j);
      switch (params.kind) {
        case KernelKind::se_linear: {
          double quad = 0.0;
          for (Index k = 0; k < q; ++k) quad += std::exp(lp(k)) * (xi(k) - xj(k)) * (xi(k) - xj(k));
          const double se = std::exp(lp(q)) * std::exp(-0.5 * quad);
          for (Index k = 0; k < q; ++k) {
            const double d = xi(k) - xj(k);
            set(k, i, j, -0.5 * se * std::exp(lp(k)) * d * d);
          }
          set(q, i, j, se);
          set(q + 1, i, j, std::exp(lp(q + 1)) * xi.dot(xj));
          break;
        }
        case KernelKind::matern32: {
          const double s = std::sqrt(3.0) * (xi - xj).norm() / std::exp(lp(0));
          const double var = std::exp(lp(1));
          set(0, i, j, var * s * s * std::exp(-s));
          set(1, i, j, var * (1.0 + s) * std::exp(-s));
          break;
        }
        case KernelKind::rational_quadratic: {
          const double alpha = std::exp(lp(2));
          const double qv = (xi - xj).squaredNorm() / (2.0 * alpha * std::exp(2.0 * lp(0)));
          const double k = std::exp(lp(1)) * std::pow(1.0 + qv, -alpha);
          set(0, i, j, 2.0 * alpha * qv * k / (1.0 + qv));
          set(1, i, j, k);
          set(2, i, j, k * alpha * (qv / (1.0 + qv) - std::log1p(qv)));
          break;
        }
        case KernelKind::piecewise_poly_q2: {
          const double r = (xi - xj).norm() / std::exp(lp(0));
          const double var = std::exp(lp(1));
          set(0, i, j, -var * r * detail::pp_q2_profile_deriv(r, q));
          set(1, i, j, var * detail::pp_q2_profile(r, q));
          break;
        }
      }
    }
  }
  return grads;
}

Vector cross_cov(const Matrix& X, const Vector& x_star, const KernelParams& params) {
  if (x_star.size() != params.input_dim) fail(ErrorClass::dimension, "cross_cov: test input dimension mismatch");
  if (X.rows() > 0 && X.cols() != params.input_dim) fail(ErrorClass::dimension, "cross_cov: covariate dimension mismatch");
  Vector c(X.rows());
  for (Index i = 0; i < X.rows(); ++i) c(i) = kernel_eval(X.row(i), x_star, params);
  return c;
}

GramFactor factorize_with_jitter(const Matrix& cov, double jitter) {
  GramFactor out;
  double current = jitter;
  for (;;) {
    out.matrix = cov;
    out.matrix.diagonal().array() += current;
    out.llt.compute(out.matrix);
    if (out.llt.info() == Eigen::Success && out.matrix.allFinite()) {
      out.jitter = current;
      return out;
    }
    if (current >= kMaxJitter) break;
    current = current <= 0.0 ? kDefaultJitter : std::min(current * 10.0, kMaxJitter);
  }
  fail(ErrorClass::conditioning, "covariance matrix not positive definite after jitter escalation");
}

}  // namespace ggpfr
