#include "ggpfr/family.hpp"

#include <cmath>
#include <limits>

#include "ggpfr/errors.hpp"
#include "ggpfr/special.hpp"

namespace ggpfr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_support(const ObservationFamily& family, double z) {
  if (!family.in_support(z))
    fail(ErrorClass::validation, "response " + std::to_string(z) + " outside the support of " + to_string(family.kind));
}

// Category boundaries on the standardized probit scale.
std::pair<double, double> ordinal_bounds(const ObservationFamily& family, int category, double eta) {
  const double scale = std::sqrt(family.dispersion);
  const Index r = family.thresholds.size() + 1;
  const double lo = category == 0 ? -kInf : (family.thresholds(category - 1) - eta) / scale;
  const double hi = category == r - 1 ? kInf : (family.thresholds(category) - eta) / scale;
  return {lo, hi};
}

LogDensityDerivs ordinal_derivs(const ObservationFamily& family, int category, double eta) {
  const auto [lo, hi] = ordinal_bounds(family, category, eta);
  const double log_p = log_normal_cdf_diff(lo, hi);
  const double scale = std::sqrt(family.dispersion);
  // Ratios phi(bound) / P evaluated in log space.
  const double r_lo = std::isinf(lo) ? 0.0 : std::exp(log_normal_pdf(lo) - log_p);
  const double r_hi = std::isinf(hi) ? 0.0 : std::exp(log_normal_pdf(hi) - log_p);
  const double d1 = (r_lo - r_hi) / scale;
  const double m_lo = std::isinf(lo) ? 0.0 : lo * r_lo;
  const double m_hi = std::isinf(hi) ? 0.0 : hi * r_hi;
  const double d2 = (m_lo - m_hi) / (scale * scale) - d1 * d1;
  return {log_p, d1, d2};
}

}  // namespace

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::bernoulli_logit: return "BERNOULLI_LOGIT";
    case FamilyKind::binomial_logit: return "BINOMIAL_LOGIT";
    case FamilyKind::poisson_log: return "POISSON_LOG";
    case FamilyKind::ordinal_probit: return "ORDINAL_PROBIT";
    case FamilyKind::gaussian_identity: return "GAUSSIAN_IDENTITY";
  }
  return "UNKNOWN";
}

FamilyKind family_kind_from_string(const std::string& name) {
  for (auto kind : {FamilyKind::bernoulli_logit, FamilyKind::binomial_logit, FamilyKind::poisson_log,
                    FamilyKind::ordinal_probit, FamilyKind::gaussian_identity})
    if (to_string(kind) == name) return kind;
  fail(ErrorClass::schema, "unknown family '" + name + "'");
}

ObservationFamily ObservationFamily::bernoulli() { return {}; }

ObservationFamily ObservationFamily::binomial(int trials) {
  ObservationFamily f;
  f.kind = FamilyKind::binomial_logit;
  f.trials = trials;
  f.check();
  return f;
}

ObservationFamily ObservationFamily::poisson() {
  ObservationFamily f;
  f.kind = FamilyKind::poisson_log;
  return f;
}

ObservationFamily ObservationFamily::gaussian(double noise_variance) {
  ObservationFamily f;
  f.kind = FamilyKind::gaussian_identity;
  f.dispersion = noise_variance;
  f.check();
  return f;
}

ObservationFamily ObservationFamily::ordinal(Vector thresholds, double dispersion) {
  ObservationFamily f;
  f.kind = FamilyKind::ordinal_probit;
  f.thresholds = std::move(thresholds);
  f.dispersion = dispersion;
  f.check();
  return f;
}

int ObservationFamily::num_categories() const {
  return is_ordinal() ? static_cast<int>(thresholds.size()) + 1 : 0;
}

void ObservationFamily::check() const {
  if (!(dispersion > 0) || !std::isfinite(dispersion))
    fail(ErrorClass::invalid_argument, "dispersion must be positive and finite");
  if (kind == FamilyKind::binomial_logit && trials < 1)
    fail(ErrorClass::invalid_argument, "binomial trials must be at least 1");
  if (is_ordinal()) {
    if (thresholds.size() < 1) fail(ErrorClass::invalid_argument, "ordinal family needs at least one threshold");
    for (Index j = 0; j < thresholds.size(); ++j) {
      if (!std::isfinite(thresholds(j))) fail(ErrorClass::invalid_argument, "thresholds must be finite");
      if (j > 0 && !(thresholds(j) > thresholds(j - 1)))
        fail(ErrorClass::invalid_argument, "thresholds must be strictly increasing");
    }
  }
}

bool ObservationFamily::in_support(double z) const {
  if (!std::isfinite(z)) return false;
  const bool integral = z == std::floor(z);
  switch (kind) {
    case FamilyKind::bernoulli_logit: return z == 0.0 || z == 1.0;
    case FamilyKind::binomial_logit: return integral && z >= 0 && z <= trials;
    case FamilyKind::poisson_log: return integral && z >= 0;
    case FamilyKind::ordinal_probit: return integral && z >= 0 && z < num_categories();
    case FamilyKind::gaussian_identity: return true;
  }
  return false;
}

LogDensityDerivs log_density_derivs(const ObservationFamily& family, double z, double eta) {
  require_support(family, z);
  switch (family.kind) {
    case FamilyKind::bernoulli_logit: {
      const double p = logistic(eta);
      return {z * eta - log1pexp(eta), z - p, -p * (1.0 - p)};
    }
    case FamilyKind::binomial_logit: {
      const double n = family.trials;
      const double p = logistic(eta);
      const double log_choose = std::lgamma(n + 1) - std::lgamma(z + 1) - std::lgamma(n - z + 1);
      return {z * eta - n * log1pexp(eta) + log_choose, z - n * p, -n * p * (1.0 - p)};
    }
    case FamilyKind::poisson_log: {
      const double rate = std::exp(eta);
      return {z * eta - rate - std::lgamma(z + 1), z - rate, -rate};
    }
    case FamilyKind::ordinal_probit:
      return ordinal_derivs(family, static_cast<int>(z), eta);
    case FamilyKind::gaussian_identity: {
      const double s2 = family.dispersion;
      const double r = z - eta;
      return {-0.5 * (kLog2Pi + std::log(s2)) - 0.5 * r * r / s2, r / s2, -1.0 / s2};
    }
  }
  fail(ErrorClass::invalid_argument, "unsupported family");
}

double log_density(const ObservationFamily& family, double z, double eta) {
  return log_density_derivs(family, z, eta).value;
}

double dlog_density(const ObservationFamily& family, double z, double eta) {
  return log_density_derivs(family, z, eta).d1;
}

double d2log_density(const ObservationFamily& family, double z, double eta) {
  return log_density_derivs(family, z, eta).d2;
}

Vector category_probs(const ObservationFamily& family, double eta) {
  if (!family.is_ordinal()) fail(ErrorClass::invalid_argument, "category_probs requires an ordinal family");
  const int r = family.num_categories();
  Vector probs(r);
  const double scale = std::sqrt(family.dispersion);
  // Differences of the CDF at consecutive thresholds; cumulative values
  // telescope so the vector sums to one up to rounding.
  double prev = 0.0;
  for (int j = 0; j < r - 1; ++j) {
    const double cur = normal_cdf((family.thresholds(j) - eta) / scale);
    probs(j) = cur - prev;
    prev = cur;
  }
  probs(r - 1) = 1.0 - prev;
  // Recompute far-tail categories from the stable log difference.
  for (int j = 0; j < r; ++j) {
    const auto [lo, hi] = ordinal_bounds(family, j, eta);
    if (probs(j) < 1e-8) probs(j) = std::exp(log_normal_cdf_diff(lo, hi));
  }
  return probs;
}

double mean_response(const ObservationFamily& family, double eta) {
  switch (family.kind) {
    case FamilyKind::bernoulli_logit: return logistic(eta);
    case FamilyKind::binomial_logit: return family.trials * logistic(eta);
    case FamilyKind::poisson_log: return std::exp(eta);
    case FamilyKind::gaussian_identity: return eta;
    case FamilyKind::ordinal_probit: {
      const Vector p = category_probs(family, eta);
      return Vector::LinSpaced(p.size(), 0.0, static_cast<double>(p.size() - 1)).dot(p);
    }
  }
  return 0.0;
}

double var_response(const ObservationFamily& family, double eta) {
  switch (family.kind) {
    case FamilyKind::bernoulli_logit: {
      const double p = logistic(eta);
      return p * (1.0 - p);
    }
    case FamilyKind::binomial_logit: {
      const double p = logistic(eta);
      return family.trials * p * (1.0 - p);
    }
    case FamilyKind::poisson_log: return std::exp(eta);
    case FamilyKind::gaussian_identity: return family.dispersion;
    case FamilyKind::ordinal_probit: {
      const Vector p = category_probs(family, eta);
      const Vector j = Vector::LinSpaced(p.size(), 0.0, static_cast<double>(p.size() - 1));
      const double m = j.dot(p);
      return std::max(0.0, j.array().square().matrix().dot(p) - m * m);
    }
  }
  return 0.0;
}

Vector thresholds_to_raw(const Vector& thresholds) {
  Vector raw(thresholds.size());
  for (Index j = 0; j < thresholds.size(); ++j)
    raw(j) = j == 0 ? thresholds(0) : std::log(thresholds(j) - thresholds(j - 1));
  return raw;
}

Vector raw_to_thresholds(const Vector& raw) {
  Vector b(raw.size());
  for (Index j = 0; j < raw.size(); ++j) b(j) = j == 0 ? raw(0) : b(j - 1) + std::exp(raw(j));
  return b;
}

}  // namespace ggpfr
