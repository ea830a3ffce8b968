#pragma once

// Scalar special functions with tail-stable evaluation.

namespace ggpfr {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kSqrt2 = 1.4142135623730950488016887242097;

double logistic(double x);
// log(1 + exp(x)) without overflow.
double log1pexp(double x);

double normal_pdf(double x);
double log_normal_pdf(double x);
double normal_cdf(double x);
// log Phi(x), accurate far into the lower tail.
double log_normal_cdf(double x);
// exp(x^2) erfc(x).
double erfcx(double x);
// log(Phi(upper) - Phi(lower)) for lower < upper; either bound may be infinite.
double log_normal_cdf_diff(double lower, double upper);
// Inverse standard normal CDF.
double normal_quantile(double p);

}  // namespace ggpfr
