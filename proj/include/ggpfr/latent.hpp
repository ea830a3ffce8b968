#pragma once

#include <functional>
#include <string>

#include <Eigen/Cholesky>

#include "ggpfr/family.hpp"
#include "ggpfr/types.hpp"

namespace ggpfr {

enum class Approximation { nested, laplace };

std::string to_string(Approximation a);
Approximation approximation_from_string(const std::string& name);

struct LatentOptions {
  double gradient_tol = 1e-8;  // sup-norm of grad Psi (Newton)
  double step_tol = 1e-8;      // sup-norm of successive iterates (Fisher scoring)
  int max_iterations = 100;
  double curvature_floor = 1e-10;
};

// Iterate carried between calls; alpha = C^{-1} tau.
struct LatentState {
  Vector tau;
  Vector alpha;
};

// Gaussian approximation N(mode, (C^{-1} + D)^{-1}) to p(tau | Z) together
// with the marginal-likelihood contribution of the batch. The precision is
// held as the Cholesky factor of I + D^{1/2} C D^{1/2}, so no explicit
// inverse of C is formed.
struct LatentPosterior {
  Vector mode;
  Vector alpha;
  Vector neg_hessian_diag;
  Matrix gram;
  Eigen::LLT<Matrix> chol_precision;
  double log_marginal_contribution = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;

  Index size() const { return mode.size(); }
  LatentState state() const { return {mode, alpha}; }
  // log|C^{-1} + D| + log|C|.
  double log_det_precision_ratio() const;
};

// Per-site log-likelihood in the latent linear predictor, site index i.
using SiteLikelihood = std::function<LogDensityDerivs(Index i, double eta)>;
SiteLikelihood family_sites(const Vector& z, const ObservationFamily& family);

// Maximizer of Psi(tau) = sum_i log p(z_i | mu_i + tau_i) + log N(tau; 0, C)
// by Newton-Raphson with step halving. Throws ConvergenceError.
Vector find_mode_newton(const Vector& z, const Vector& mu, const Matrix& C, const ObservationFamily& family,
                        const LatentOptions& opts = {});

// Fisher-scoring fixed point of (C^{-1} + D) tau = a with a, D refreshed from
// the second-order expansion of the data term at the previous iterate.
LatentPosterior gaussian_approx_fisher(const Vector& z, const Vector& mu, const Matrix& C,
                                       const ObservationFamily& family, const LatentOptions& opts = {},
                                       const LatentState* warm_start = nullptr);

// Psi(tau_hat) + N/2 log 2 pi - 1/2 log|C^{-1} + K| at the Newton mode.
double laplace_log_marginal(const Vector& z, const Vector& mu, const Matrix& C, const ObservationFamily& family,
                            const LatentOptions& opts = {});

// log p(tau, Z) - log p_G(tau | Z) at the Gaussian-approximation mode.
double nested_log_marginal(const Vector& z, const Vector& mu, const Matrix& C, const ObservationFamily& family,
                           const LatentOptions& opts = {});

// Generic entry points over arbitrary site likelihoods; the returned
// posterior carries the chosen approximation's log marginal.
LatentPosterior laplace_posterior(const SiteLikelihood& sites, const Vector& mu, const Matrix& C,
                                  const LatentOptions& opts = {}, const LatentState* warm_start = nullptr);
LatentPosterior nested_posterior(const SiteLikelihood& sites, const Vector& mu, const Matrix& C,
                                 const LatentOptions& opts = {}, const LatentState* warm_start = nullptr);
LatentPosterior latent_posterior(Approximation approx, const Vector& z, const Vector& mu, const Matrix& C,
                                 const ObservationFamily& family, const LatentOptions& opts = {},
                                 const LatentState* warm_start = nullptr);

// Psi(tau) including the normalizing terms of the Gaussian prior.
double log_joint(const Vector& z, const Vector& mu, const Matrix& C, const ObservationFamily& family,
                 const Vector& tau);

// Rebuilds the precision factor of a posterior from its gram and curvature.
void refactor_posterior(LatentPosterior& post);

struct LatentMoments {
  double mean = 0.0;
  double var = 0.0;
};

// Moments of p(tau* | Z) = N(a^T mode, a^T Omega a + sigma*^2) with
// a^T = c*^T C^{-1} and sigma*^2 = k** - c*^T C^{-1} c*.
LatentMoments predictive_latent(const LatentPosterior& post, const Vector& cross_cov, double prior_var);

// 1/2 log|I + delta C| via Cholesky.
double regret_term(const Matrix& C, double delta);

}  // namespace ggpfr
