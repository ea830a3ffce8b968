#include "ggpfr/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ggpfr/errors.hpp"

namespace ggpfr {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628694807945156077;
constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;

}  // namespace

const char* error_class_name(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::io: return "io";
    case ErrorClass::schema: return "schema";
    case ErrorClass::consistency: return "consistency";
    case ErrorClass::validation: return "validation";
    case ErrorClass::parse: return "parse";
    case ErrorClass::version: return "version";
    case ErrorClass::dimension: return "dimension";
    case ErrorClass::invalid_argument: return "invalid_argument";
    case ErrorClass::conditioning: return "conditioning";
    case ErrorClass::convergence: return "convergence";
  }
  return "unknown";
}

int exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::io: return 2;
    case ErrorClass::conditioning:
    case ErrorClass::convergence: return 4;
    default: return 3;
  }
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1pexp(double x) {
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double normal_pdf(double x) { return std::exp(log_normal_pdf(x)); }

double log_normal_pdf(double x) { return -0.5 * x * x - kHalfLog2Pi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double erfcx(double x) {
  if (x < 0) return 2.0 * std::exp(x * x) - erfcx(-x);
  if (x < 26.0) return std::exp(x * x) * std::erfc(x);
  // Asymptotic series; truncation error below 1e-12 relative for x >= 26.
  const double inv2 = 1.0 / (x * x);
  const double series = 1.0 - 0.5 * inv2 * (1.0 - 1.5 * inv2 * (1.0 - 2.5 * inv2 * (1.0 - 3.5 * inv2)));
  return kInvSqrtPi / x * series;
}

double log_normal_cdf(double x) {
  if (x == -std::numeric_limits<double>::infinity()) return -std::numeric_limits<double>::infinity();
  if (x >= 0) return std::log1p(-0.5 * std::erfc(x / kSqrt2));
  return std::log(0.5 * erfcx(-x / kSqrt2)) - 0.5 * x * x;
}

double log_normal_cdf_diff(double lower, double upper) {
  if (!(lower < upper)) fail(ErrorClass::invalid_argument, "log_normal_cdf_diff: lower must be below upper");
  const double width = upper - lower;
  if (std::isfinite(width) && width * std::max({std::abs(lower), std::abs(upper), 1.0}) < 0.5) {
    // Narrow interval: 8-point Gauss-Legendre on phi(x) / phi(mid), no cancellation.
    static const double node[] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
    static const double weight[] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    const double mid = 0.5 * (lower + upper), half = 0.5 * width;
    double acc = 0.0;
    for (int k = 0; k < 4; ++k)
      for (double s : {half * node[k], -half * node[k]}) acc += weight[k] * std::exp(-mid * s - 0.5 * s * s);
    return -kHalfLog2Pi - 0.5 * mid * mid + std::log(half * acc);
  }
  if (lower >= 0) {
    // Both in the upper tail: Q(lower) - Q(upper) with Q(x) = Phi(-x).
    const double lq = log_normal_cdf(-lower);
    const double uq = log_normal_cdf(-upper);
    return lq + std::log1p(-std::exp(uq - lq));
  }
  if (upper <= 0) {
    const double lu = log_normal_cdf(upper);
    const double ll = log_normal_cdf(lower);
    return lu + std::log1p(-std::exp(ll - lu));
  }
  const double mass_outside = 0.5 * std::erfc(-lower / kSqrt2) + 0.5 * std::erfc(upper / kSqrt2);
  return std::log1p(-mass_outside);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorClass::invalid_argument, "normal_quantile: p must lie in (0,1)");
  // Acklam's rational approximation followed by one Halley refinement step.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01, -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1 + 0.5 * x * u);
}

}  // namespace ggpfr
