#include "ggpfr/latent.hpp"

#include <cmath>

#include "ggpfr/errors.hpp"
#include "ggpfr/special.hpp"

namespace ggpfr {

namespace {

struct SiteTerms {
  double log_lik = 0.0;
  Vector d1;
  Vector w;  // -d2 floored at the curvature floor
};

SiteTerms evaluate_sites(const SiteLikelihood& sites, const Vector& mu, const Vector& tau, double floor) {
  const Index n = mu.size();
  SiteTerms out;
  out.d1.resize(n);
  out.w.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto d = sites(i, mu(i) + tau(i));
    out.log_lik += d.value;
    out.d1(i) = d.d1;
    out.w(i) = std::max(-d.d2, floor);
  }
  if (!std::isfinite(out.log_lik)) fail(ErrorClass::conditioning, "non-finite log-likelihood in latent inference");
  return out;
}

// Cholesky of I + W^{1/2} C W^{1/2}.
Eigen::LLT<Matrix> factor_b(const Matrix& C, const Vector& sw) {
  Matrix b = sw.asDiagonal() * C * sw.asDiagonal();
  b.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(b);
  if (llt.info() != Eigen::Success) fail(ErrorClass::conditioning, "I + W^1/2 C W^1/2 not positive definite");
  return llt;
}

// Full Newton step target: (C^{-1} + W)^{-1} (W tau + d1), returned with its alpha.
LatentState newton_target(const Matrix& C, const SiteTerms& t, const Vector& tau, const Eigen::LLT<Matrix>& llt) {
  const Vector sw = t.w.array().sqrt().matrix();
  const Vector b = t.w.cwiseProduct(tau) + t.d1;
  const Vector cb = C * b;
  LatentState next;
  next.alpha = b - sw.cwiseProduct(llt.solve(sw.cwiseProduct(cb)));
  next.tau = C * next.alpha;
  return next;
}

double psi_rel(double log_lik, const LatentState& s) { return log_lik - 0.5 * s.alpha.dot(s.tau); }

// A warm start keeps alpha and rebuilds tau = C alpha for the current C; it
// is dropped when it scores below the prior mean.
LatentState initial_state(const SiteLikelihood& sites, const Vector& mu, const Matrix& C, const LatentState* warm,
                          double floor) {
  const Index n = mu.size();
  LatentState zero{Vector::Zero(n), Vector::Zero(n)};
  if (!warm || warm->alpha.size() != n) return zero;
  LatentState s{C * warm->alpha, warm->alpha};
  try {
    const double psi_warm = psi_rel(evaluate_sites(sites, mu, s.tau, floor).log_lik, s);
    const double psi_zero = evaluate_sites(sites, mu, zero.tau, floor).log_lik;
    if (std::isfinite(psi_warm) && psi_warm > psi_zero) return s;
  } catch (const Error&) {
  }
  return zero;
}

void check_inputs(const Vector& mu, const Matrix& C) {
  if (C.rows() != mu.size() || C.cols() != mu.size())
    fail(ErrorClass::dimension, "latent inference: covariance size does not match the batch");
  if (!mu.allFinite() || !C.allFinite()) fail(ErrorClass::conditioning, "non-finite mean or covariance");
}

// Step from `cur` toward `target`, halving while Psi decreases.
LatentState damped_step(const SiteLikelihood& sites, const Vector& mu, const LatentState& cur, double psi_cur,
                        const LatentState& target, double floor, double* psi_out) {
  double step = 1.0;
  for (int halving = 0; halving < 40; ++halving) {
    LatentState trial{cur.tau + step * (target.tau - cur.tau), cur.alpha + step * (target.alpha - cur.alpha)};
    double log_lik = -std::numeric_limits<double>::infinity();
    try {
      log_lik = evaluate_sites(sites, mu, trial.tau, floor).log_lik;
    } catch (const Error&) {
    }
    const double psi = psi_rel(log_lik, trial);
    if (std::isfinite(psi) && psi >= psi_cur - 1e-12 * (1.0 + std::abs(psi_cur))) {
      *psi_out = psi;
      return trial;
    }
    step *= 0.5;
  }
  *psi_out = psi_cur;
  return cur;
}

LatentPosterior finish(const Matrix& C, const SiteTerms& t, const LatentState& s, int iterations, double grad_norm,
                       Eigen::LLT<Matrix> llt) {
  LatentPosterior post;
  post.mode = s.tau;
  post.alpha = s.alpha;
  post.neg_hessian_diag = t.w;
  post.gram = C;
  post.chol_precision = std::move(llt);
  post.iterations = iterations;
  post.gradient_norm = grad_norm;
  const double half_log_det = post.chol_precision.matrixLLT().diagonal().array().log().sum();
  post.log_marginal_contribution = t.log_lik - 0.5 * s.alpha.dot(s.tau) - half_log_det;
  return post;
}

}  // namespace

std::string to_string(Approximation a) { return a == Approximation::nested ? "NESTED" : "LAPLACE"; }

Approximation approximation_from_string(const std::string& name) {
  if (name == "NESTED" || name == "nested") return Approximation::nested;
  if (name == "LAPLACE" || name == "laplace") return Approximation::laplace;
  fail(ErrorClass::schema, "unknown objective '" + name + "'");
}

double LatentPosterior::log_det_precision_ratio() const {
  return 2.0 * chol_precision.matrixLLT().diagonal().array().log().sum();
}

SiteLikelihood family_sites(const Vector& z, const ObservationFamily& family) {
  return [&z, &family](Index i, double eta) { return log_density_derivs(family, z(i), eta); };
}

LatentPosterior laplace_posterior(const SiteLikelihood& sites, const Vector& mu, const Matrix& C,
                                  const LatentOptions& opts, const LatentState* warm_start) {
  check_inputs(mu, C);
  LatentState s = initial_state(sites, mu, C, warm_start, opts.curvature_floor);
  double grad_norm = 0.0;
  for (int it = 0; it <= opts.max_iterations; ++it) {
    SiteTerms t = evaluate_sites(sites, mu, s.tau, opts.curvature_floor);
    grad_norm = mu.size() ? (t.d1 - s.alpha).cwiseAbs().maxCoeff() : 0.0;
    auto llt = factor_b(C, t.w.array().sqrt().matrix());
    if (grad_norm < opts.gradient_tol) return finish(C, t, s, it, grad_norm, std::move(llt));
    if (it == opts.max_iterations) break;
    const LatentState target = newton_target(C, t, s.tau, llt);
    double psi = 0.0;
    s = damped_step(sites, mu, s, psi_rel(t.log_lik, s), target, opts.curvature_floor, &psi);
  }
  throw ConvergenceError("Newton mode search did not converge (gradient sup-norm " + std::to_string(grad_norm) + ")",
                         grad_norm);
}

LatentPosterior nested_posterior(const SiteLikelihood& sites, const Vector& mu, const Matrix& C,
                                 const LatentOptions& opts, const LatentState* warm_start) {
  check_inputs(mu, C);
  LatentState s = initial_state(sites, mu, C, warm_start, opts.curvature_floor);
  SiteTerms t = evaluate_sites(sites, mu, s.tau, opts.curvature_floor);
  double change = 0.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    // Expansion at the previous iterate: a = d1 + D tau_prev, D = -d2.
    auto llt = factor_b(C, t.w.array().sqrt().matrix());
    const LatentState target = newton_target(C, t, s.tau, llt);
    double psi = 0.0;
    const LatentState next = damped_step(sites, mu, s, psi_rel(t.log_lik, s), target, opts.curvature_floor, &psi);
    change = mu.size() ? (next.tau - s.tau).cwiseAbs().maxCoeff() : 0.0;
    s = next;
    t = evaluate_sites(sites, mu, s.tau, opts.curvature_floor);
    if (change < opts.step_tol) {
      const double grad_norm = mu.size() ? (t.d1 - s.alpha).cwiseAbs().maxCoeff() : 0.0;
      return finish(C, t, s, it, grad_norm, factor_b(C, t.w.array().sqrt().matrix()));
    }
  }
  throw ConvergenceError("Fisher scoring did not converge (last step " + std::to_string(change) + ")", change);
}

LatentPosterior latent_posterior(Approximation approx, const Vector& z, const Vector& mu, const Matrix& C,
                                 const ObservationFamily& family, const LatentOptions& opts,
                                 const LatentState* warm_start) {
  const auto sites = family_sites(z, family);
  return approx == Approximation::nested ? nested_posterior(sites, mu, C, opts, warm_start)
                                         : laplace_posterior(sites, mu, C, opts, warm_start);
}

Vector find_mode_newton(const Vector& z, const Vector& mu, const Matrix& C, const ObservationFamily& family,
                        const LatentOptions& opts) {
  return laplace_posterior(family_sites(z, family), mu, C, opts).mode;
}

LatentPosterior gaussian_approx_fisher(const Vector& z, const Vector& mu, const Matrix& C,
                                       const ObservationFamily& family, const LatentOptions& opts,
                                       const LatentState* warm_start) {
  return nested_posterior(family_sites(z, family), mu, C, opts, warm_start);
}

double laplace_log_marginal(const Vector& z, const Vector& mu, const Matrix& C, const ObservationFamily& family,
                            const LatentOptions& opts) {
  return laplace_posterior(family_sites(z, family), mu, C, opts).log_marginal_contribution;
}

double nested_log_marginal(const Vector& z, const Vector& mu, const Matrix& C, const ObservationFamily& family,
                           const LatentOptions& opts) {
  return nested_posterior(family_sites(z, family), mu, C, opts).log_marginal_contribution;
}

double log_joint(const Vector& z, const Vector& mu, const Matrix& C, const ObservationFamily& family,
                 const Vector& tau) {
  check_inputs(mu, C);
  Eigen::LLT<Matrix> llt(C);
  if (llt.info() != Eigen::Success) fail(ErrorClass::conditioning, "log_joint: covariance not positive definite");
  double ll = 0.0;
  for (Index i = 0; i < z.size(); ++i) ll += log_density(family, z(i), mu(i) + tau(i));
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return ll - 0.5 * static_cast<double>(z.size()) * kLog2Pi - 0.5 * log_det - 0.5 * tau.dot(llt.solve(tau));
}

void refactor_posterior(LatentPosterior& post) {
  post.chol_precision = factor_b(post.gram, post.neg_hessian_diag.array().sqrt().matrix());
}

LatentMoments predictive_latent(const LatentPosterior& post, const Vector& cross_cov, double prior_var) {
  if (cross_cov.size() != post.size()) fail(ErrorClass::dimension, "predictive_latent: cross covariance size mismatch");
  LatentMoments m;
  m.mean = cross_cov.dot(post.alpha);
  const Vector v =
      post.chol_precision.matrixL().solve(post.neg_hessian_diag.array().sqrt().matrix().cwiseProduct(cross_cov));
  m.var = std::max(0.0, prior_var - v.squaredNorm());
  return m;
}

double regret_term(const Matrix& C, double delta) {
  if (C.rows() != C.cols()) fail(ErrorClass::dimension, "regret_term: matrix must be square");
  if (!(delta >= 0)) fail(ErrorClass::invalid_argument, "regret_term: delta must be non-negative");
  Matrix m = delta * C;
  m.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) fail(ErrorClass::conditioning, "regret_term: I + delta C not positive definite");
  return llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace ggpfr
