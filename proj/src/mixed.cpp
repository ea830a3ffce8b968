#include "ggpfr/mixed.hpp"

#include <map>

#include "ggpfr/errors.hpp"

namespace ggpfr {

Index ClusteredDataset::num_re_covariates() const {
  for (const auto& c : clusters)
    for (const auto& s : c.subjects) return s.re_covariates.cols();
  return 0;
}

Index ClusteredDataset::num_subjects() const {
  Index n = 0;
  for (const auto& c : clusters) n += static_cast<Index>(c.subjects.size());
  return n;
}

ClusteredDataset cluster_dataset(const Dataset& data, const Vector& gamma) {
  ClusteredDataset out;
  out.family_tag = data.family_tag;
  std::map<std::string, std::size_t> index;
  for (const auto& b : data.batches) {
    if (b.cluster_id.empty()) fail(ErrorClass::schema, "batch '" + b.batch_id + "' has no cluster_id");
    auto it = index.find(b.cluster_id);
    if (it == index.end()) {
      it = index.emplace(b.cluster_id, out.clusters.size()).first;
      out.clusters.push_back({b.cluster_id, {}});
    }
    out.clusters[it->second].subjects.push_back(b);
  }
  out.gamma = gamma;
  return out;
}

Dataset flatten(const ClusteredDataset& data) {
  Dataset d;
  d.family_tag = data.family_tag;
  for (const auto& c : data.clusters)
    for (const auto& s : c.subjects) d.batches.push_back(s);
  return d;
}

void validate_clustered(const ClusteredDataset& data, const ObservationFamily& family) {
  if (data.clusters.empty()) fail(ErrorClass::invalid_argument, "no clusters");
  validate_dataset(flatten(data), family);
  const Index r = data.num_re_covariates();
  if (r == 0) fail(ErrorClass::schema, "clustered data need random-effect covariates w1..wr");
  for (const auto& c : data.clusters) {
    if (c.subjects.empty()) fail(ErrorClass::validation, "cluster '" + c.cluster_id + "' is empty");
    for (const auto& s : c.subjects)
      if (s.re_covariates.cols() != r || s.re_covariates.rows() != s.size())
        fail(ErrorClass::dimension, "subject '" + s.batch_id + "' has an inconsistent random-effect design");
  }
  if (data.gamma.size() != 0 && data.gamma.size() != r)
    fail(ErrorClass::dimension, "gamma length does not match the random-effect design");
  if ((data.gamma.array() < 0).any()) fail(ErrorClass::validation, "gamma entries must be non-negative");
}

LatentGroup cluster_group(const Cluster& cluster, const Vector& x_center, const Vector& x_scale) {
  Dataset d;
  d.batches = cluster.subjects;
  const auto parts = independent_groups(d, x_center, x_scale);
  Index n = 0;
  for (const auto& p : parts) n += p.size();
  LatentGroup g;
  g.id = cluster.cluster_id;
  if (parts.empty()) return g;
  const Index q = parts.front().inputs.cols(), p = parts.front().scalar_rows.cols(),
              r = parts.front().re_design.cols();
  g.times.resize(n);
  g.responses.resize(n);
  g.inputs.resize(n, q);
  g.scalar_rows.resize(n, p);
  g.re_design.resize(n, r);
  Index k = 0;
  for (std::size_t s = 0; s < parts.size(); ++s) {
    const auto& part = parts[s];
    g.member_ids.push_back(part.id);
    g.times.segment(k, part.size()) = part.times;
    g.responses.segment(k, part.size()) = part.responses;
    g.inputs.middleRows(k, part.size()) = part.inputs;
    g.scalar_rows.middleRows(k, part.size()) = part.scalar_rows;
    if (r > 0) g.re_design.middleRows(k, part.size()) = part.re_design;
    g.subject.insert(g.subject.end(), static_cast<std::size_t>(part.size()), static_cast<Index>(s));
    k += part.size();
  }
  return g;
}

Matrix assemble_cluster_cov(const Cluster& cluster, const KernelParams& theta, const Vector& gamma, double jitter) {
  if ((gamma.array() < 0).any()) fail(ErrorClass::invalid_argument, "gamma entries must be non-negative");
  Matrix S = group_covariance(cluster_group(cluster), theta, gamma);
  S.diagonal().array() += jitter;
  return S;
}

namespace {

struct ClusterSetup {
  std::vector<LatentGroup> groups;
  ModelParams start;
  ParamLayout layout;
  ModelSpec spec;
};

ClusterSetup setup(const ClusteredDataset& data, const ModelSpec& spec, const SplineBasis& basis,
                   bool estimate_gamma) {
  spec.check();
  ClusterSetup s;
  s.spec = spec;
  for (const auto& c : data.clusters) s.groups.push_back(cluster_group(c));
  s.start = initial_params(s.groups, spec, basis);
  if (s.spec.family.is_ordinal()) s.spec.family.thresholds = s.start.thresholds;
  validate_clustered(data, s.spec.family);
  const Index r = data.num_re_covariates();
  s.start.gamma = data.gamma.size() == r ? data.gamma : Vector::Constant(r, 0.1);
  if (!estimate_gamma && data.gamma.size() != r) fail(ErrorClass::invalid_argument, "fixed gamma must be supplied");
  if (s.spec.family.is_ordinal()) s.spec.family.thresholds = s.start.thresholds;
  s.spec.kernel.kind = s.start.theta.kind;
  s.layout = param_layout(flatten(data), s.spec, basis);
  s.layout.n_gamma = estimate_gamma ? r : 0;
  return s;
}

}  // namespace

FittedModel fit_clustered(const ClusteredDataset& data, const ModelSpec& spec, bool estimate_gamma) {
  if (spec.standardize) fail(ErrorClass::invalid_argument, "standardization is not supported for clustered fits");
  auto fit_at = [&](const SplineBasis& basis) {
    ClusterSetup s = setup(data, spec, basis, estimate_gamma);
    return fit_groups(std::move(s.groups), s.spec, basis, s.start, s.layout, true);
  };
  const Dataset flat = flatten(data);
  if (spec.basis.D) return fit_at(basis_for(flat, *spec.basis.D, spec.basis.knots));
  std::optional<FittedModel> best;
  for (Index D : spec.basis.grid) {
    FittedModel m = fit_at(basis_for(flat, D, spec.basis.knots));
    if (!best || m.bic < best->bic || (m.bic == best->bic && m.basis.size() < best->basis.size()))
      best = std::move(m);
  }
  return *best;
}

double clustered_objective(const Vector& x, const ClusteredDataset& data, const ModelSpec& spec,
                           const SplineBasis& basis, bool estimate_gamma) {
  ClusterSetup s = setup(data, spec, basis, estimate_gamma);
  MarginalEvaluator eval(std::move(s.groups), s.spec, basis, s.layout, s.start, false);
  return eval(x);
}

PredictiveDistribution predict_clustered(const FittedModel& model, const Cluster& cluster_obs,
                                         const std::string& subject_id, double t_star, const Vector& x_star,
                                         const Vector& w_star, const Vector& u_star, const PredictOptions& opts) {
  if (!model.clustered) fail(ErrorClass::invalid_argument, "model was not fitted to clustered data");
  if (w_star.size() != model.gamma.size()) fail(ErrorClass::dimension, "w* has the wrong length");
  const LatentGroup group = cluster_group(cluster_obs, model.x_center, model.x_scale);
  const LatentPosterior post = group_posterior(model, group);
  Index target = -1;
  for (std::size_t s = 0; s < group.member_ids.size(); ++s)
    if (group.member_ids[s] == subject_id) target = static_cast<Index>(s);
  const Vector x = model.transform_input(x_star);
  const Vector gw = model.gamma.cwiseProduct(w_star);
  Vector cross = group.re_design * gw;
  for (Index l = 0; l < group.size(); ++l)
    if (group.subject[static_cast<std::size_t>(l)] == target)
      cross(l) += kernel_eval(group.inputs.row(l).transpose(), x, model.theta);
  const double prior = kernel_eval(x, x, model.theta) + w_star.dot(gw);
  const LatentMoments lm = predictive_latent(post, cross, prior);
  return response_moments(model.family, mean_structure_at(model, t_star, u_star), lm, opts);
}

}  // namespace ggpfr
