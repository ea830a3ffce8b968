#pragma once

#include <string>
#include <vector>

#include "ggpfr/data.hpp"
#include "ggpfr/fit.hpp"
#include "ggpfr/predict.hpp"

namespace ggpfr {

struct Cluster {
  std::string cluster_id;
  std::vector<FunctionalBatch> subjects;
};

struct ClusteredDataset {
  std::vector<Cluster> clusters;
  Vector gamma;  // diagonal of Gamma; starting values or the fixed values
  FamilyKind family_tag = FamilyKind::bernoulli_logit;

  Index num_re_covariates() const;
  Index num_subjects() const;
};

// Groups batches by cluster_id, keeping the batch order within a cluster.
ClusteredDataset cluster_dataset(const Dataset& data, const Vector& gamma = {});
Dataset flatten(const ClusteredDataset& data);
void validate_clustered(const ClusteredDataset& data, const ObservationFamily& family);

LatentGroup cluster_group(const Cluster& cluster, const Vector& x_center = {}, const Vector& x_scale = {});

// blockdiag(C_i1, ..., C_iN) + W Gamma W^T + jitter I.
Matrix assemble_cluster_cov(const Cluster& cluster, const KernelParams& theta, const Vector& gamma, double jitter);

// With estimate_gamma false the random-effect variances stay at data.gamma.
FittedModel fit_clustered(const ClusteredDataset& data, const ModelSpec& spec, bool estimate_gamma = true);

// Objective over the cluster groups at a flat parameter vector laid out as
// for fit_clustered.
double clustered_objective(const Vector& x, const ClusteredDataset& data, const ModelSpec& spec,
                           const SplineBasis& basis, bool estimate_gamma);

// Predicts for subject `subject_id` of the observed cluster; an id not in
// the cluster is treated as a new subject sharing only the cluster effect.
PredictiveDistribution predict_clustered(const FittedModel& model, const Cluster& cluster_obs,
                                         const std::string& subject_id, double t_star, const Vector& x_star,
                                         const Vector& w_star, const Vector& u_star, const PredictOptions& opts = {});

}  // namespace ggpfr
