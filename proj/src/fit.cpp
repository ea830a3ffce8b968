#include "ggpfr/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ggpfr/errors.hpp"
#include "ggpfr/random.hpp"
#include "ggpfr/special.hpp"

namespace ggpfr {

namespace {

Vector pooled_times(const Dataset& data) {
  Vector all(data.num_observations());
  Index k = 0;
  for (const auto& b : data.batches) {
    all.segment(k, b.size()) = b.times;
    k += b.size();
  }
  return all;
}

// Link-scale stand-in for a response, kept finite.
double working_response(const ObservationFamily& family, double z) {
  switch (family.kind) {
    case FamilyKind::bernoulli_logit:
    case FamilyKind::binomial_logit: {
      const double n = family.kind == FamilyKind::bernoulli_logit ? 1.0 : family.trials;
      const double p = (z + 0.5) / (n + 1.0);
      return std::log(p / (1.0 - p));
    }
    case FamilyKind::poisson_log:
      return std::log(z + 0.5);
    case FamilyKind::gaussian_identity:
      return z;
    case FamilyKind::ordinal_probit: {
      const Vector& b = family.thresholds;
      const Index r1 = b.size();
      const double gap = r1 > 1 ? (b(r1 - 1) - b(0)) / static_cast<double>(r1 - 1) : 0.5;
      const auto j = static_cast<Index>(z);
      if (j == 0) return b(0) - 0.5 * gap;
      if (j == r1) return b(r1 - 1) + 0.5 * gap;
      return 0.5 * (b(j - 1) + b(j));
    }
  }
  return z;
}

Vector sample_variance_cols(const Matrix& X) {
  Vector var(X.cols());
  for (Index q = 0; q < X.cols(); ++q) {
    const double m = X.col(q).mean();
    var(q) = X.rows() > 1 ? (X.col(q).array() - m).square().sum() / static_cast<double>(X.rows() - 1) : 0.0;
  }
  return var;
}

KernelParams scaled_kernel(KernelKind kind, const Matrix& X, double signal_var) {
  const Index q = X.cols();
  const Vector var = sample_variance_cols(X).cwiseMax(1e-6);
  switch (kind) {
    case KernelKind::se_linear: {
      const double mean_sq = X.array().square().colwise().mean().sum();
      return KernelParams::se_linear(var.cwiseInverse(), signal_var, signal_var / std::max(mean_sq, 1e-6));
    }
    case KernelKind::matern32:
      return KernelParams::matern32(q, std::sqrt(var.sum()), signal_var);
    case KernelKind::rational_quadratic:
      return KernelParams::rational_quadratic(q, std::sqrt(var.sum()), signal_var, 1.0);
    case KernelKind::piecewise_poly_q2:
      return KernelParams::piecewise_poly_q2(q, 2.0 * std::sqrt(var.sum()), signal_var);
  }
  return KernelParams::defaults(kind, q);
}

// b_j at the cumulative frequency of categories below j.
Vector frequency_thresholds(const std::vector<LatentGroup>& groups, int categories) {
  std::vector<double> counts(static_cast<std::size_t>(categories), 0.0);
  double total = 0.0;
  for (const auto& g : groups)
    for (Index i = 0; i < g.size(); ++i) {
      counts[static_cast<std::size_t>(g.responses(i))] += 1.0;
      total += 1.0;
    }
  Vector b(categories - 1);
  double cum = 0.0;
  for (int j = 0; j + 1 < categories; ++j) {
    cum += counts[static_cast<std::size_t>(j)] / total;
    b(j) = cum;
  }
  // Empty categories would give ties.
  for (Index j = 1; j < b.size(); ++j) b(j) = std::max(b(j), b(j - 1) + 1e-3);
  return b;
}

}  // namespace

void ModelSpec::check() const {
  if (family.is_ordinal() && family.thresholds.size() == 0)
    ObservationFamily::ordinal(Vector::Zero(1), family.dispersion);  // dispersion check only
  else
    family.check();
  if (kernel.log_params.size() > 0) kernel.check();
  if (basis.D && *basis.D < 4) fail(ErrorClass::invalid_argument, "basis dimension must be at least 4");
  if (!basis.D && basis.grid.empty()) fail(ErrorClass::invalid_argument, "empty basis grid");
  for (Index d : basis.grid)
    if (d < 4) fail(ErrorClass::invalid_argument, "basis grid entries must be at least 4");
  if (!(optimizer.tol > 0)) fail(ErrorClass::invalid_argument, "optimizer tolerance must be positive");
  if (optimizer.max_evals < 1) fail(ErrorClass::invalid_argument, "optimizer.max_evals must be positive");
  if (restarts < 0) fail(ErrorClass::invalid_argument, "restarts must be non-negative");
  if (!(jitter >= 0)) fail(ErrorClass::invalid_argument, "jitter must be non-negative");
}

std::vector<LatentGroup> independent_groups(const Dataset& data, const Vector& x_center, const Vector& x_scale) {
  std::vector<LatentGroup> groups;
  groups.reserve(data.batches.size());
  for (const auto& b : data.batches) {
    LatentGroup g;
    g.id = b.batch_id;
    g.member_ids = {b.batch_id};
    g.subject.assign(static_cast<std::size_t>(b.size()), 0);
    g.times = b.times;
    g.responses = b.responses;
    g.inputs = b.covariates;
    if (x_center.size() > 0)
      for (Index i = 0; i < g.inputs.rows(); ++i)
        g.inputs.row(i) = ((g.inputs.row(i).transpose() - x_center).cwiseQuotient(x_scale)).transpose();
    g.scalar_rows = b.scalar_covariates.transpose().replicate(b.size(), 1);
    g.re_design = b.re_covariates;
    groups.push_back(std::move(g));
  }
  return groups;
}

Matrix group_covariance(const LatentGroup& group, const KernelParams& theta, const Vector& gamma) {
  const Index n = group.size();
  Matrix C = Matrix::Zero(n, n);
  Index start = 0;
  while (start < n) {
    Index end = start;
    while (end < n && group.subject[static_cast<std::size_t>(end)] == group.subject[static_cast<std::size_t>(start)])
      ++end;
    C.block(start, start, end - start, end - start) = gram_matrix(group.inputs.middleRows(start, end - start), theta);
    start = end;
  }
  if (gamma.size() > 0) {
    if (group.re_design.cols() != gamma.size())
      fail(ErrorClass::dimension, "random-effect design does not match gamma");
    C.noalias() += group.re_design * gamma.asDiagonal() * group.re_design.transpose();
  }
  return C;
}

Matrix mean_design(const LatentGroup& group, const SplineBasis& basis) {
  const Index D = basis.size(), p = group.scalar_rows.cols();
  Matrix out(group.size(), D * p);
  for (Index i = 0; i < group.size(); ++i) {
    const Vector phi = basis_row(basis, group.times(i));
    for (Index j = 0; j < p; ++j) out.row(i).segment(j * D, D) = group.scalar_rows(i, j) * phi.transpose();
  }
  return out;
}

Vector encode_params(const ModelParams& params, const ParamLayout& layout) {
  Vector x(layout.size());
  x.head(layout.D * layout.p) = Eigen::Map<const Vector>(params.B.data(), layout.D * layout.p);
  x.segment(layout.theta_offset(), layout.n_theta) = params.theta.log_params;
  if (layout.n_thresholds > 0)
    x.segment(layout.threshold_offset(), layout.n_thresholds) = thresholds_to_raw(params.thresholds);
  if (layout.n_gamma > 0)
    x.segment(layout.gamma_offset(), layout.n_gamma) = params.gamma.cwiseMax(kGammaFloor).array().log().matrix();
  return x;
}

ModelParams decode_params(const Vector& x, const ParamLayout& layout, const ModelParams& fixed) {
  if (x.size() != layout.size()) fail(ErrorClass::dimension, "parameter vector does not match the layout");
  ModelParams out = fixed;
  out.B = Eigen::Map<const Matrix>(x.data(), layout.D, layout.p);
  out.theta.log_params = x.segment(layout.theta_offset(), layout.n_theta);
  if (layout.n_thresholds > 0) out.thresholds = raw_to_thresholds(x.segment(layout.threshold_offset(), layout.n_thresholds));
  if (layout.n_gamma > 0)
    out.gamma = x.segment(layout.gamma_offset(), layout.n_gamma).array().exp().matrix().cwiseMax(kGammaFloor);
  return out;
}

Index FittedModel::num_parameters() const {
  Index g = B.size() + theta.size() + gamma.size();
  if (family.is_ordinal()) g += family.thresholds.size();
  return g;
}

Vector FittedModel::transform_input(const Vector& x) const {
  if (x_center.size() == 0) return x;
  if (x.size() != x_center.size()) fail(ErrorClass::dimension, "covariate row has the wrong dimension");
  return (x - x_center).cwiseQuotient(x_scale);
}

MarginalEvaluator::MarginalEvaluator(std::vector<LatentGroup> groups, const ModelSpec& spec, const SplineBasis& basis,
                                     const ParamLayout& layout, const ModelParams& fixed, bool reuse)
    : groups_(std::move(groups)), spec_(spec), basis_(basis), layout_(layout), fixed_(fixed), reuse_(reuse) {
  designs_.reserve(groups_.size());
  for (const auto& g : groups_) designs_.push_back(mean_design(g, basis_));
  warm_.resize(groups_.size());
}

const std::vector<Matrix>& MarginalEvaluator::covariances(const ModelParams& params) {
  Vector key(params.theta.size() + params.gamma.size());
  key << params.theta.log_params, params.gamma;
  if (reuse_ && !covs_.empty() && key.size() == cov_key_.size() && key == cov_key_) return covs_;
  params.theta.check();
  covs_.clear();
  jitters_.clear();
  cov_key_ = key;
  try {
    for (const auto& g : groups_) {
      GramFactor f = factorize_with_jitter(group_covariance(g, params.theta, params.gamma), spec_.jitter);
      covs_.push_back(std::move(f.matrix));
      jitters_.push_back(f.jitter);
    }
  } catch (...) {
    covs_.clear();
    cov_key_.resize(0);
    throw;
  }
  return covs_;
}

double MarginalEvaluator::evaluate(const Vector& x, std::vector<LatentPosterior>* posteriors) {
  const ModelParams params = decode_params(x, layout_, fixed_);
  ObservationFamily family = spec_.family;
  if (family.is_ordinal()) {
    family.thresholds = params.thresholds;
    family.check();
  }
  const auto& covs = covariances(params);
  const Vector vec_b = Eigen::Map<const Vector>(params.B.data(), params.B.size());
  if (posteriors) posteriors->clear();
  double total = 0.0;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const Vector mu = designs_[g] * vec_b;
    const LatentState* warm = reuse_ && warm_[g].tau.size() > 0 ? &warm_[g] : nullptr;
    LatentPosterior post =
        latent_posterior(spec_.objective, groups_[g].responses, mu, covs[g], family, spec_.latent, warm);
    total += post.log_marginal_contribution;
    if (reuse_) warm_[g] = post.state();
    if (posteriors) posteriors->push_back(std::move(post));
  }
  if (!std::isfinite(total)) fail(ErrorClass::conditioning, "non-finite marginal likelihood");
  return total;
}

double MarginalEvaluator::operator()(const Vector& x) {
  try {
    return evaluate(x, nullptr);
  } catch (const Error&) {
    ++penalties_;
    for (auto& w : warm_) w = LatentState{};
    return kPenaltyValue;
  }
}

SplineBasis basis_for(const Dataset& data, Index D, KnotMethod method) {
  return place_knots(pooled_times(data), D, method);
}

ParamLayout param_layout(const Dataset& data, const ModelSpec& spec, const SplineBasis& basis) {
  ParamLayout layout;
  layout.D = basis.size();
  layout.p = data.num_scalar_covariates();
  layout.n_theta = kernel_param_count(spec.kernel.kind, data.num_covariates());
  if (spec.family.is_ordinal() && spec.estimate_thresholds) {
    const int r = spec.family.num_categories();
    layout.n_thresholds = r > 1 ? r - 1 : 0;
  }
  return layout;
}

ModelParams initial_params(const std::vector<LatentGroup>& groups, const ModelSpec& spec, const SplineBasis& basis) {
  if (groups.empty()) fail(ErrorClass::invalid_argument, "no batches to fit");
  ObservationFamily family = spec.family;
  ModelParams out;
  if (family.is_ordinal()) {
    if (family.thresholds.size() == 0) {
      double top = 0.0;
      for (const auto& g : groups)
        if (g.size() > 0) top = std::max(top, g.responses.maxCoeff());
      family.thresholds = frequency_thresholds(groups, std::max(2, static_cast<int>(top) + 1));
    }
    out.thresholds = family.thresholds;
  }

  Index total = 0;
  for (const auto& g : groups) total += g.size();
  const Index D = basis.size(), p = groups.front().scalar_rows.cols(), q = groups.front().inputs.cols();
  Matrix design(total, D * p);
  Vector w(total);
  Matrix X(total, q);
  Index k = 0;
  for (const auto& g : groups) {
    design.middleRows(k, g.size()) = mean_design(g, basis);
    X.middleRows(k, g.size()) = g.inputs;
    for (Index i = 0; i < g.size(); ++i) w(k + i) = working_response(family, g.responses(i));
    k += g.size();
  }
  Matrix normal = design.transpose() * design;
  normal.diagonal().array() += 1e-8 * std::max(1.0, normal.diagonal().maxCoeff());
  const Vector beta = normal.ldlt().solve(design.transpose() * w);
  out.B = Eigen::Map<const Matrix>(beta.data(), D, p);

  const Vector resid = w - design * beta;
  const double s2 = std::max(resid.squaredNorm() / static_cast<double>(std::max<Index>(total - 1, 1)), 1e-2);
  if (spec.kernel.log_params.size() == kernel_param_count(spec.kernel.kind, q))
    out.theta = spec.kernel;
  else
    out.theta = scaled_kernel(spec.kernel.kind, X, s2);
  out.theta.input_dim = q;
  return out;
}

double objective(const Vector& x, const Dataset& data, const ModelSpec& spec, const SplineBasis& basis) {
  const ParamLayout layout = param_layout(data, spec, basis);
  ModelParams fixed;
  fixed.theta = spec.kernel;
  fixed.theta.input_dim = data.num_covariates();
  fixed.thresholds = spec.family.thresholds;
  MarginalEvaluator eval(independent_groups(data), spec, basis, layout, fixed, false);
  return eval(x);
}

double bic_value(double log_marginal, Index num_parameters, Index num_batches) {
  if (num_batches < 1) fail(ErrorClass::invalid_argument, "BIC needs at least one batch");
  return -2.0 * log_marginal + static_cast<double>(num_parameters) * std::log(static_cast<double>(num_batches));
}

double bic(const FittedModel& model, Index num_batches) {
  return bic_value(model.log_marginal, model.num_parameters(), num_batches);
}

FittedModel fit_groups(std::vector<LatentGroup> groups, const ModelSpec& spec, const SplineBasis& basis,
                       const ModelParams& start, const ParamLayout& layout, bool clustered) {
  MarginalEvaluator eval(groups, spec, basis, layout, start, true);
  const Vector x0 = encode_params(start, layout);
  const auto f = [&eval](const Vector& x) { return eval(x); };

  OptimResult best;
  best.value = -std::numeric_limits<double>::infinity();
  int evaluations = 0;
  Rng rng = Rng::stream(spec.seed, 0x5eed);
  for (int r = 0; r <= spec.restarts; ++r) {
    Vector init = x0;
    if (r > 0) {
      // Jitter the covariance block and, more gently, the mean block.
      for (Index k = 0; k < layout.D * layout.p; ++k) init(k) += 0.1 * rng.normal();
      for (Index k = layout.theta_offset(); k < layout.size(); ++k) init(k) += 0.5 * rng.normal();
    }
    OptimResult res = lbfgs_maximize(f, init, spec.optimizer);
    evaluations += res.evaluations;
    if (res.value > best.value) best = std::move(res);
  }
  if (!(best.value > kPenaltyValue)) fail(ErrorClass::conditioning, "no restart produced a finite objective");

  // Final pass without warm starts so the stored posteriors do not depend on
  // the optimizer's path.
  MarginalEvaluator cold(std::move(groups), spec, basis, layout, start, false);
  FittedModel model;
  model.log_marginal = cold.evaluate(best.x, &model.per_batch);
  const ModelParams params = decode_params(best.x, layout, start);
  model.family = spec.family;
  if (model.family.is_ordinal()) model.family.thresholds = params.thresholds;
  model.theta = params.theta;
  model.basis = basis;
  model.B = params.B;
  model.gamma = params.gamma;
  model.clustered = clustered;
  model.objective = spec.objective;
  model.jitter = spec.jitter;
  model.groups = cold.groups();
  model.fit_trace = best.trace;
  model.evaluations = evaluations;
  model.penalty_count = eval.penalty_count();
  model.converged = best.converged;
  model.bic = bic(model, model.num_groups());
  double regret = 0.0;
  for (const auto& post : model.per_batch)
    regret += regret_term(post.gram, 1.0) / static_cast<double>(std::max<Index>(post.size(), 1));
  model.regret = regret / static_cast<double>(std::max<std::size_t>(model.per_batch.size(), 1));
  return model;
}

namespace {

void standardization(const Dataset& data, bool enabled, Vector& center, Vector& scale) {
  center.resize(0);
  scale.resize(0);
  if (!enabled) return;
  Matrix X(data.num_observations(), data.num_covariates());
  Index k = 0;
  for (const auto& b : data.batches) {
    X.middleRows(k, b.size()) = b.covariates;
    k += b.size();
  }
  center = X.colwise().mean().transpose();
  scale = sample_variance_cols(X).cwiseSqrt();
  for (Index q = 0; q < scale.size(); ++q)
    if (!(scale(q) > 0)) scale(q) = 1.0;
}

FittedModel fit_from(const Dataset& data, const ModelSpec& spec, const SplineBasis& basis,
                     const ModelParams* start_override) {
  spec.check();
  if (data.batches.empty()) fail(ErrorClass::invalid_argument, "no batches to fit");
  Vector center, scale;
  standardization(data, spec.standardize, center, scale);
  auto groups = independent_groups(data, center, scale);
  ModelSpec s = spec;
  ModelParams start = start_override ? *start_override : initial_params(groups, s, basis);
  if (s.family.is_ordinal()) s.family.thresholds = start.thresholds;
  validate_dataset(data, s.family);
  if (s.family.is_ordinal()) s.family.thresholds = start.thresholds;
  s.kernel.kind = start.theta.kind;
  const ParamLayout layout = param_layout(data, s, basis);
  FittedModel model = fit_groups(std::move(groups), s, basis, start, layout, false);
  model.x_center = center;
  model.x_scale = scale;
  return model;
}

}  // namespace

FittedModel fit_with_basis(const Dataset& data, const ModelSpec& spec, const SplineBasis& basis) {
  return fit_from(data, spec, basis, nullptr);
}

FittedModel fit(const Dataset& data, const ModelSpec& spec) {
  if (!spec.basis.D) return select_basis_dim(data, spec);
  return fit_with_basis(data, spec, basis_for(data, *spec.basis.D, spec.basis.knots));
}

FittedModel refit(const Dataset& data, const ModelSpec& spec, const FittedModel& start) {
  ModelSpec s = spec;
  s.restarts = 0;
  s.kernel = start.theta;
  s.standardize = start.x_center.size() > 0;
  const ModelParams params = start.params();
  return fit_from(data, s, start.basis, &params);
}

FittedModel select_basis_dim(const Dataset& data, const ModelSpec& spec) {
  spec.check();
  std::vector<Index> grid = spec.basis.grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::optional<FittedModel> best;
  std::string last_error;
  for (Index D : grid) {
    try {
      FittedModel m = fit_with_basis(data, spec, basis_for(data, D, spec.basis.knots));
      if (!best || m.bic < best->bic) best = std::move(m);
    } catch (const Error& e) {
      if (e.error_class() != ErrorClass::conditioning && e.error_class() != ErrorClass::convergence) throw;
      last_error = e.what();
    }
  }
  if (!best) fail(ErrorClass::conditioning, "every basis dimension in the grid failed: " + last_error);
  return *best;
}

double evaluate_model(const FittedModel& model) {
  ModelSpec spec;
  spec.family = model.family;
  spec.kernel = model.theta;
  spec.objective = model.objective;
  spec.jitter = model.jitter;
  ParamLayout layout;
  layout.D = model.basis.size();
  layout.p = model.B.cols();
  layout.n_theta = model.theta.size();
  MarginalEvaluator eval(model.groups, spec, model.basis, layout, model.params(), false);
  return eval.evaluate(encode_params(model.params(), layout), nullptr);
}

}  // namespace ggpfr
