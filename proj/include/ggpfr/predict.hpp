#pragma once

#include <vector>

#include "ggpfr/data.hpp"
#include "ggpfr/fit.hpp"
#include "ggpfr/latent.hpp"
#include "ggpfr/types.hpp"

namespace ggpfr {

struct PredictiveDistribution {
  double mean_structure = 0.0;  // u*^T B^T Phi(t*)
  double latent_mean = 0.0;     // of tau*
  double latent_var = 0.0;
  double response_mean = 0.0;
  double response_var = 0.0;
  Vector category_probs;  // ordinal only

  // Predicted latent y at the test point.
  double latent_y() const { return mean_structure + latent_mean; }
};

struct PredictOptions {
  int nodes = 30;
};

double mean_structure_at(const FittedModel& model, double t, const Vector& u);

// Response moments when tau* ~ N(latent.mean, latent.var) and eta = mu + tau*.
PredictiveDistribution response_moments(const ObservationFamily& family, double mu, const LatentMoments& latent,
                                        const PredictOptions& opts = {});

// Gaussian approximation p_G(tau_k | Z_k) for a group under the model's
// parameters, with the jitter rule used at fit time.
LatentPosterior group_posterior(const FittedModel& model, const LatentGroup& group);
LatentGroup batch_group(const FittedModel& model, const FunctionalBatch& batch);

LatentMoments latent_posterior_at(const FittedModel& model, const FunctionalBatch& batch_obs, const Vector& x_star);

PredictiveDistribution predict_response(const FittedModel& model, const FunctionalBatch& batch_obs, double t_star,
                                        const Vector& x_star, const Vector& u_star, const PredictOptions& opts = {});

// Many test points against one observed batch; the posterior is computed once.
class BatchPredictor {
 public:
  BatchPredictor(const FittedModel& model, const FunctionalBatch& batch_obs, const PredictOptions& opts = {});
  LatentMoments latent(const Vector& x_star) const;
  PredictiveDistribution predict(double t_star, const Vector& x_star, const Vector& u_star) const;
  const LatentPosterior& posterior() const { return post_; }

 private:
  const FittedModel& model_;
  LatentGroup group_;
  LatentPosterior post_;
  PredictOptions opts_;
};

// Joint-mode Laplace evaluation of E(z*), E(z*^2) and E Var(z* | tau*) over
// (tau_k, tau*), normalized by the Laplace estimate of p(Z_k).
PredictiveDistribution predict_response_laplace(const FittedModel& model, const FunctionalBatch& batch_obs,
                                                double t_star, const Vector& x_star, const Vector& u_star,
                                                const PredictOptions& opts = {});

// Mixture over the fitted batches; empty weights mean 1/M each.
PredictiveDistribution predict_new_batch(const FittedModel& model, double t_star, const Vector& x_star,
                                         const Vector& u_star, const Vector& weights = {},
                                         const PredictOptions& opts = {});

// Combines per-batch (mean, var) pairs into the mixture moments.
PredictiveDistribution mix_predictions(const std::vector<PredictiveDistribution>& parts, const Vector& weights);

// Bernoulli/binomial: mean/trials > 0.5; ordinal: argmax probability; ties
// go to the lower class. Poisson/Gaussian: rounded mean.
int classify(const PredictiveDistribution& pred, const ObservationFamily& family);

}  // namespace ggpfr
