#include "ggpfr/predict.hpp"

#include <cmath>

#include "ggpfr/basis.hpp"
#include "ggpfr/errors.hpp"
#include "ggpfr/quadrature.hpp"
#include "ggpfr/special.hpp"

namespace ggpfr {

namespace {

LatentMoments moments_at(const FittedModel& model, const LatentGroup& group, const LatentPosterior& post,
                         const Vector& x_model) {
  const Vector cross = cross_cov(group.inputs, x_model, model.theta);
  return predictive_latent(post, cross, kernel_eval(x_model, x_model, model.theta));
}

// log f(eta) with derivatives for a positive functional f of eta.
using LogFunctional = std::function<LogDensityDerivs(double)>;

LogDensityDerivs numeric_log(const std::function<double(double)>& f, double eta) {
  const double h = 1e-4;
  const double f0 = std::log(f(eta)), fp = std::log(f(eta + h)), fm = std::log(f(eta - h));
  return {f0, (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h)};
}

LogFunctional log_mean_functional(const ObservationFamily& family) {
  switch (family.kind) {
    case FamilyKind::bernoulli_logit:
    case FamilyKind::binomial_logit: {
      const double n = family.kind == FamilyKind::binomial_logit ? family.trials : 1.0;
      return [n](double eta) {
        const double pi = logistic(eta);
        return LogDensityDerivs{std::log(n) - log1pexp(-eta), 1.0 - pi, -pi * (1.0 - pi)};
      };
    }
    case FamilyKind::poisson_log:
      return [](double eta) { return LogDensityDerivs{eta, 1.0, 0.0}; };
    case FamilyKind::gaussian_identity:
      return [](double eta) {
        return LogDensityDerivs{eta > 0 ? std::log(eta) : -std::numeric_limits<double>::infinity(), 1.0 / eta,
                                -1.0 / (eta * eta)};
      };
    case FamilyKind::ordinal_probit:
      return [family](double eta) { return numeric_log([&](double e) { return mean_response(family, e); }, eta); };
  }
  return {};
}

LogFunctional log_var_functional(const ObservationFamily& family) {
  switch (family.kind) {
    case FamilyKind::bernoulli_logit:
    case FamilyKind::binomial_logit: {
      const double n = family.kind == FamilyKind::binomial_logit ? family.trials : 1.0;
      return [n](double eta) {
        const double pi = logistic(eta);
        return LogDensityDerivs{std::log(n) - log1pexp(-eta) - log1pexp(eta), 1.0 - 2.0 * pi, -2.0 * pi * (1.0 - pi)};
      };
    }
    case FamilyKind::poisson_log:
      return [](double eta) { return LogDensityDerivs{eta, 1.0, 0.0}; };
    case FamilyKind::gaussian_identity: {
      const double lv = std::log(family.dispersion);
      return [lv](double) { return LogDensityDerivs{lv, 0.0, 0.0}; };
    }
    case FamilyKind::ordinal_probit:
      return [family](double eta) { return numeric_log([&](double e) { return var_response(family, e); }, eta); };
  }
  return {};
}

}  // namespace

double mean_structure_at(const FittedModel& model, double t, const Vector& u) {
  if (u.size() != model.B.cols()) fail(ErrorClass::dimension, "scalar covariate vector has the wrong length");
  return basis_row(model.basis, t).dot(model.B * u);
}

PredictiveDistribution response_moments(const ObservationFamily& family, double mu, const LatentMoments& latent,
                                        const PredictOptions& opts) {
  PredictiveDistribution out;
  out.mean_structure = mu;
  out.latent_mean = latent.mean;
  out.latent_var = latent.var;
  const double m = mu + latent.mean;
  if (family.is_ordinal()) {
    // Probit against a normal latent is again probit with inflated noise.
    ObservationFamily wide = family;
    wide.dispersion = family.dispersion + latent.var;
    out.category_probs = category_probs(wide, m);
    double mean = 0.0, second = 0.0;
    for (Index j = 0; j < out.category_probs.size(); ++j) {
      mean += static_cast<double>(j) * out.category_probs(j);
      second += static_cast<double>(j * j) * out.category_probs(j);
    }
    out.response_mean = mean;
    out.response_var = std::max(0.0, second - mean * mean);
    return out;
  }
  const double e_h = normal_expectation([&](double e) { return mean_response(family, e); }, m, latent.var, opts.nodes);
  const double e_h2 = normal_expectation(
      [&](double e) {
        const double h = mean_response(family, e);
        return h * h;
      },
      m, latent.var, opts.nodes);
  const double e_var =
      normal_expectation([&](double e) { return var_response(family, e); }, m, latent.var, opts.nodes);
  out.response_mean = e_h;
  out.response_var = std::max(0.0, e_var + e_h2 - e_h * e_h);
  return out;
}

LatentGroup batch_group(const FittedModel& model, const FunctionalBatch& batch) {
  Dataset d;
  d.batches = {batch};
  auto groups = independent_groups(d, model.x_center, model.x_scale);
  return groups.front();
}

LatentPosterior group_posterior(const FittedModel& model, const LatentGroup& group) {
  if (group.size() == 0) fail(ErrorClass::invalid_argument, "no observations in batch; use new-batch prediction");
  const Matrix design = mean_design(group, model.basis);
  const Vector mu = design * Eigen::Map<const Vector>(model.B.data(), model.B.size());
  GramFactor f = factorize_with_jitter(group_covariance(group, model.theta, model.gamma), model.jitter);
  return gaussian_approx_fisher(group.responses, mu, f.matrix, model.family);
}

LatentMoments latent_posterior_at(const FittedModel& model, const FunctionalBatch& batch_obs, const Vector& x_star) {
  return BatchPredictor(model, batch_obs).latent(x_star);
}

PredictiveDistribution predict_response(const FittedModel& model, const FunctionalBatch& batch_obs, double t_star,
                                        const Vector& x_star, const Vector& u_star, const PredictOptions& opts) {
  return BatchPredictor(model, batch_obs, opts).predict(t_star, x_star, u_star);
}

BatchPredictor::BatchPredictor(const FittedModel& model, const FunctionalBatch& batch_obs, const PredictOptions& opts)
    : model_(model), group_(batch_group(model, batch_obs)), opts_(opts) {
  if (model.clustered) fail(ErrorClass::invalid_argument, "clustered models predict through predict_clustered");
  post_ = group_posterior(model, group_);
}

LatentMoments BatchPredictor::latent(const Vector& x_star) const {
  return moments_at(model_, group_, post_, model_.transform_input(x_star));
}

PredictiveDistribution BatchPredictor::predict(double t_star, const Vector& x_star, const Vector& u_star) const {
  return response_moments(model_.family, mean_structure_at(model_, t_star, u_star), latent(x_star), opts_);
}

PredictiveDistribution predict_response_laplace(const FittedModel& model, const FunctionalBatch& batch_obs,
                                                double t_star, const Vector& x_star, const Vector& u_star,
                                                const PredictOptions& opts) {
  const LatentGroup group = batch_group(model, batch_obs);
  if (group.size() == 0) fail(ErrorClass::invalid_argument, "no observations in batch; use new-batch prediction");
  const Index n = group.size();
  const Vector x = model.transform_input(x_star);
  const double mu_star = mean_structure_at(model, t_star, u_star);
  const Vector mu = mean_design(group, model.basis) * Eigen::Map<const Vector>(model.B.data(), model.B.size());

  GramFactor fk = factorize_with_jitter(group_covariance(group, model.theta, model.gamma), model.jitter);
  Matrix c_plus(n + 1, n + 1);
  c_plus.topLeftCorner(n, n) = fk.matrix;
  const Vector cross = cross_cov(group.inputs, x, model.theta);
  c_plus.topRightCorner(n, 1) = cross;
  c_plus.bottomLeftCorner(1, n) = cross.transpose();
  c_plus(n, n) = kernel_eval(x, x, model.theta) + fk.jitter;
  Vector mu_plus(n + 1);
  mu_plus << mu, mu_star;

  const auto data_sites = family_sites(group.responses, model.family);
  const LatentPosterior base = laplace_posterior(data_sites, mu, fk.matrix);
  const double log_pz = base.log_marginal_contribution;

  auto log_expectation = [&](const LogFunctional& term, double scale) {
    SiteLikelihood sites = [&](Index i, double eta) {
      if (i < n) return data_sites(i, eta);
      const auto d = term(eta);
      return LogDensityDerivs{scale * d.value, scale * d.d1, scale * d.d2};
    };
    return laplace_posterior(sites, mu_plus, c_plus).log_marginal_contribution - log_pz;
  };

  PredictiveDistribution out;
  out.mean_structure = mu_star;
  const LatentMoments lm = predictive_latent(base, cross, kernel_eval(x, x, model.theta));
  out.latent_mean = lm.mean;
  out.latent_var = lm.var;
  const auto log_h = log_mean_functional(model.family);
  const double e_h = std::exp(log_expectation(log_h, 1.0));
  const double e_h2 = std::exp(log_expectation(log_h, 2.0));
  const double e_var = std::exp(log_expectation(log_var_functional(model.family), 1.0));
  out.response_mean = e_h;
  out.response_var = std::max(0.0, e_var + e_h2 - e_h * e_h);
  if (model.family.is_ordinal()) out.category_probs = response_moments(model.family, mu_star, lm, opts).category_probs;
  return out;
}

PredictiveDistribution mix_predictions(const std::vector<PredictiveDistribution>& parts, const Vector& weights) {
  if (parts.empty()) fail(ErrorClass::invalid_argument, "mixture needs at least one component");
  if (weights.size() != static_cast<Index>(parts.size()))
    fail(ErrorClass::invalid_argument, "mixture weights do not match the number of batches");
  if ((weights.array() < 0).any() || std::abs(weights.sum() - 1.0) > 1e-10)
    fail(ErrorClass::invalid_argument, "mixture weights must be non-negative and sum to one");
  PredictiveDistribution out;
  double second = 0.0, var = 0.0;
  for (std::size_t m = 0; m < parts.size(); ++m) {
    const double w = weights(static_cast<Index>(m));
    const auto& p = parts[m];
    out.mean_structure += w * p.mean_structure;
    out.latent_mean += w * p.latent_mean;
    out.latent_var += w * (p.latent_var + p.latent_mean * p.latent_mean);
    out.response_mean += w * p.response_mean;
    second += w * p.response_mean * p.response_mean;
    var += w * p.response_var;
    if (p.category_probs.size() > 0) {
      if (out.category_probs.size() == 0) out.category_probs = Vector::Zero(p.category_probs.size());
      out.category_probs += w * p.category_probs;
    }
  }
  out.latent_var = std::max(0.0, out.latent_var - out.latent_mean * out.latent_mean);
  out.response_var = std::max(0.0, var + second - out.response_mean * out.response_mean);
  return out;
}

PredictiveDistribution predict_new_batch(const FittedModel& model, double t_star, const Vector& x_star,
                                         const Vector& u_star, const Vector& weights, const PredictOptions& opts) {
  if (model.clustered) fail(ErrorClass::invalid_argument, "new-batch prediction is defined for independent batches");
  const Index M = model.num_groups();
  if (M == 0 || static_cast<Index>(model.per_batch.size()) != M)
    fail(ErrorClass::invalid_argument, "model carries no fitted batches");
  const Vector w = weights.size() == 0 ? Vector::Constant(M, 1.0 / static_cast<double>(M)) : weights;
  const Vector x = model.transform_input(x_star);
  const double mu = mean_structure_at(model, t_star, u_star);
  std::vector<PredictiveDistribution> parts;
  parts.reserve(static_cast<std::size_t>(M));
  for (Index m = 0; m < M; ++m) {
    const auto& g = model.groups[static_cast<std::size_t>(m)];
    parts.push_back(response_moments(model.family, mu, moments_at(model, g, model.per_batch[static_cast<std::size_t>(m)], x), opts));
  }
  return mix_predictions(parts, w);
}

int classify(const PredictiveDistribution& pred, const ObservationFamily& family) {
  switch (family.kind) {
    case FamilyKind::bernoulli_logit:
      return pred.response_mean > 0.5 ? 1 : 0;
    case FamilyKind::binomial_logit:
      return static_cast<int>(std::floor(pred.response_mean + 0.5 - 1e-12));
    case FamilyKind::ordinal_probit: {
      Index best = 0;
      for (Index j = 1; j < pred.category_probs.size(); ++j)
        if (pred.category_probs(j) > pred.category_probs(best)) best = j;
      return static_cast<int>(best);
    }
    case FamilyKind::poisson_log:
    case FamilyKind::gaussian_identity:
      return static_cast<int>(std::floor(pred.response_mean + 0.5 - 1e-12));
  }
  return 0;
}

}  // namespace ggpfr
