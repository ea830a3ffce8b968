#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ggpfr/basis.hpp"
#include "ggpfr/data.hpp"
#include "ggpfr/family.hpp"
#include "ggpfr/kernels.hpp"
#include "ggpfr/latent.hpp"
#include "ggpfr/optim.hpp"
#include "ggpfr/types.hpp"

namespace ggpfr {

struct BasisSpec {
  std::optional<Index> D;  // empty selects D by BIC over `grid`
  KnotMethod knots = KnotMethod::equal_spaced;
  std::vector<Index> grid = {4, 5, 6, 7, 8, 9, 10, 11, 12};
};

struct ModelSpec {
  ObservationFamily family;  // ordinal thresholds here are starting values
  KernelParams kernel;       // empty log_params: data-scaled defaults
  BasisSpec basis;
  Approximation objective = Approximation::nested;
  OptimizerSettings optimizer;
  LatentOptions latent;
  int restarts = 2;
  std::uint64_t seed = 1;
  double jitter = kDefaultJitter;
  bool standardize = false;
  bool estimate_thresholds = true;

  void check() const;
};

// Observations sharing one latent vector: a single batch, or all curves of
// a cluster joined end to end.
struct LatentGroup {
  std::string id;
  std::vector<std::string> member_ids;
  std::vector<Index> subject;  // member index of each row
  Vector times;
  Vector responses;
  Matrix inputs;       // N x Q, standardized if the model says so
  Matrix scalar_rows;  // N x p, u of the row's member
  Matrix re_design;    // N x r, empty without random effects

  Index size() const { return times.size(); }
};

std::vector<LatentGroup> independent_groups(const Dataset& data, const Vector& x_center = {},
                                            const Vector& x_scale = {});

// Block-diagonal per-subject Gram plus W Gamma W^T; no jitter.
Matrix group_covariance(const LatentGroup& group, const KernelParams& theta, const Vector& gamma = {});

// Row i is kron(u_i, Phi(t_i)), so mu = design * vec(B).
Matrix mean_design(const LatentGroup& group, const SplineBasis& basis);

// Flat parameter vector: vec(B) column-major, log theta, raw thresholds,
// log gamma. Blocks that are held fixed have zero length.
struct ParamLayout {
  Index D = 0;
  Index p = 0;
  Index n_theta = 0;
  Index n_thresholds = 0;
  Index n_gamma = 0;

  Index size() const { return D * p + n_theta + n_thresholds + n_gamma; }
  Index theta_offset() const { return D * p; }
  Index threshold_offset() const { return theta_offset() + n_theta; }
  Index gamma_offset() const { return threshold_offset() + n_thresholds; }
};

struct ModelParams {
  Matrix B;
  KernelParams theta;
  Vector thresholds;
  Vector gamma;
};

inline constexpr double kGammaFloor = 1e-10;

Vector encode_params(const ModelParams& params, const ParamLayout& layout);
// Fixed blocks are copied from `fixed`.
ModelParams decode_params(const Vector& x, const ParamLayout& layout, const ModelParams& fixed);

struct FittedModel {
  ObservationFamily family;
  KernelParams theta;
  SplineBasis basis;
  Matrix B;  // D x p
  Vector gamma;
  bool clustered = false;
  Approximation objective = Approximation::nested;
  double jitter = kDefaultJitter;
  Vector x_center;  // empty when inputs are used as given
  Vector x_scale;
  std::vector<LatentGroup> groups;
  std::vector<LatentPosterior> per_batch;
  double log_marginal = 0.0;
  double bic = 0.0;
  double regret = 0.0;  // mean over groups of 1/2 log|I + C| / N
  std::vector<double> fit_trace;
  int evaluations = 0;
  int penalty_count = 0;
  bool converged = false;

  Index num_parameters() const;
  Index num_groups() const { return static_cast<Index>(groups.size()); }
  ModelParams params() const { return {B, theta, family.thresholds, gamma}; }
  // Applies the stored standardization to a raw covariate row.
  Vector transform_input(const Vector& x) const;
};

// Sum over groups of the approximate log marginal, with optional reuse of
// Gram matrices and latent modes between calls. Failed evaluations return
// kPenaltyValue and are counted.
class MarginalEvaluator {
 public:
  MarginalEvaluator(std::vector<LatentGroup> groups, const ModelSpec& spec, const SplineBasis& basis,
                    const ParamLayout& layout, const ModelParams& fixed, bool reuse);

  double operator()(const Vector& x);
  // Throws on failure; fills posteriors when requested.
  double evaluate(const Vector& x, std::vector<LatentPosterior>* posteriors);

  const ParamLayout& layout() const { return layout_; }
  const std::vector<LatentGroup>& groups() const { return groups_; }
  int penalty_count() const { return penalties_; }
  double applied_jitter(Index g) const { return jitters_[static_cast<std::size_t>(g)]; }

 private:
  const std::vector<Matrix>& covariances(const ModelParams& params);

  std::vector<LatentGroup> groups_;
  ModelSpec spec_;
  SplineBasis basis_;
  ParamLayout layout_;
  ModelParams fixed_;
  bool reuse_;
  std::vector<Matrix> designs_;
  Vector cov_key_;
  std::vector<Matrix> covs_;
  std::vector<double> jitters_;
  std::vector<LatentState> warm_;
  int penalties_ = 0;
};

ParamLayout param_layout(const Dataset& data, const ModelSpec& spec, const SplineBasis& basis);
SplineBasis basis_for(const Dataset& data, Index D, KnotMethod method);

// Working-response least squares for B, data-scaled theta, thresholds from
// category frequencies.
ModelParams initial_params(const std::vector<LatentGroup>& groups, const ModelSpec& spec, const SplineBasis& basis);

// Pure objective: no state is carried between calls.
double objective(const Vector& x, const Dataset& data, const ModelSpec& spec, const SplineBasis& basis);

FittedModel fit(const Dataset& data, const ModelSpec& spec);
FittedModel fit_with_basis(const Dataset& data, const ModelSpec& spec, const SplineBasis& basis);
// Restarts the optimizer from a previous fit's parameters.
FittedModel refit(const Dataset& data, const ModelSpec& spec, const FittedModel& start);
FittedModel select_basis_dim(const Dataset& data, const ModelSpec& spec);

// Shared driver for independent and clustered fits.
FittedModel fit_groups(std::vector<LatentGroup> groups, const ModelSpec& spec, const SplineBasis& basis,
                       const ModelParams& start, const ParamLayout& layout, bool clustered);

double bic_value(double log_marginal, Index num_parameters, Index num_batches);
double bic(const FittedModel& model, Index num_batches);

// Re-evaluates the model's objective at its stored parameters.
double evaluate_model(const FittedModel& model);

}  // namespace ggpfr
