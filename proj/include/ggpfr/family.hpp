#pragma once

#include <string>

#include "ggpfr/types.hpp"

namespace ggpfr {

// Observation models. The three canonical kinds use the canonical link so
// the natural parameter equals the latent value eta. GAUSSIAN_IDENTITY is the
// closed-form reference model used for exactness checks; its dispersion is the
// noise variance. For ORDINAL_PROBIT the dispersion is the variance of the
// probit noise on the latent scale (1 gives the standard probit link).
enum class FamilyKind {
  bernoulli_logit,
  binomial_logit,
  poisson_log,
  ordinal_probit,
  gaussian_identity,
};

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);

struct ObservationFamily {
  FamilyKind kind = FamilyKind::bernoulli_logit;
  int trials = 1;
  double dispersion = 1.0;
  Vector thresholds;  // b_1 < ... < b_{r-1}, ordinal only

  static ObservationFamily bernoulli();
  static ObservationFamily binomial(int trials);
  static ObservationFamily poisson();
  static ObservationFamily gaussian(double noise_variance = 1.0);
  static ObservationFamily ordinal(Vector thresholds, double dispersion = 1.0);

  bool is_ordinal() const { return kind == FamilyKind::ordinal_probit; }
  // Categories for ordinal families, 0 otherwise.
  int num_categories() const;
  // Throws on invariant violations (thresholds order, dispersion, trials).
  void check() const;
  // True when z lies in the support of the family.
  bool in_support(double z) const;
};

struct LogDensityDerivs {
  double value;
  double d1;
  double d2;
};

double log_density(const ObservationFamily& family, double z, double eta);
double dlog_density(const ObservationFamily& family, double z, double eta);
double d2log_density(const ObservationFamily& family, double z, double eta);
LogDensityDerivs log_density_derivs(const ObservationFamily& family, double z, double eta);

double mean_response(const ObservationFamily& family, double eta);
double var_response(const ObservationFamily& family, double eta);
// P(z = j | eta) for j = 0..r-1 (ordinal only).
Vector category_probs(const ObservationFamily& family, double eta);

// Unconstrained threshold coordinates (b_1, log(b_2 - b_1), ...).
Vector thresholds_to_raw(const Vector& thresholds);
Vector raw_to_thresholds(const Vector& raw);

}  // namespace ggpfr
