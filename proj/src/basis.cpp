#include "ggpfr/basis.hpp"

#include <algorithm>
#include <cmath>

#include "ggpfr/errors.hpp"

namespace ggpfr {

std::string to_string(KnotMethod method) {
  return method == KnotMethod::equal_spaced ? "EQUAL_SPACED" : "QUANTILE";
}

KnotMethod knot_method_from_string(const std::string& name) {
  if (name == "EQUAL_SPACED" || name == "equal") return KnotMethod::equal_spaced;
  if (name == "QUANTILE" || name == "quantile") return KnotMethod::quantile;
  fail(ErrorClass::schema, "unknown knot method '" + name + "'");
}

double sample_quantile(Vector v, double prob) {
  std::sort(v.data(), v.data() + v.size());
  const double h = (static_cast<double>(v.size()) - 1.0) * prob;
  const auto lo = static_cast<Index>(std::floor(h));
  const Index hi = std::min<Index>(lo + 1, v.size() - 1);
  return v(lo) + (h - static_cast<double>(lo)) * (v(hi) - v(lo));
}

SplineBasis make_basis(const Vector& interior, double lower, double upper, int degree) {
  if (!(upper > lower)) fail(ErrorClass::invalid_argument, "spline domain is empty");
  SplineBasis basis;
  basis.degree = degree;
  const Index m = interior.size();
  basis.knots.resize(m + 2 * (degree + 1));
  basis.knots.head(degree + 1).setConstant(lower);
  basis.knots.segment(degree + 1, m) = interior;
  basis.knots.tail(degree + 1).setConstant(upper);
  return basis;
}

SplineBasis place_knots(const Vector& times_all, Index D, KnotMethod method, int degree) {
  if (D < degree + 1) fail(ErrorClass::invalid_argument, "basis dimension must be at least degree+1");
  if (times_all.size() == 0) fail(ErrorClass::invalid_argument, "no time points for knot placement");
  const double lo = times_all.minCoeff(), hi = times_all.maxCoeff();
  if (!(hi > lo)) fail(ErrorClass::invalid_argument, "all time points identical; cannot place knots");
  const Index m = D - degree - 1;
  Vector interior(m);
  for (Index k = 1; k <= m; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(m + 1);
    interior(k - 1) = method == KnotMethod::equal_spaced ? lo + (hi - lo) * frac : sample_quantile(times_all, frac);
  }
  return make_basis(interior, lo, hi, degree);
}

Vector basis_row(const SplineBasis& basis, double t) {
  const int p = basis.degree;
  const Vector& U = basis.knots;
  const Index n = basis.size();
  t = std::clamp(t, basis.lower(), basis.upper());
  // Knot span with U[span] <= t < U[span+1]; the right end uses the last non-empty span.
  Index span = p;
  if (t >= U(n)) {
    span = n - 1;
  } else {
    span = static_cast<Index>(std::upper_bound(U.data() + p, U.data() + n + 1, t) - U.data()) - 1;
  }
  // Cox-de Boor triangle for the p+1 non-zero functions on the span.
  Vector local = Vector::Zero(p + 1), left(p + 1), right(p + 1);
  local(0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left(j) = t - U(span + 1 - j);
    right(j) = U(span + j) - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right(r + 1) + left(j - r);
      const double temp = denom == 0.0 ? 0.0 : local(r) / denom;
      local(r) = saved + right(r + 1) * temp;
      saved = left(j - r) * temp;
    }
    local(j) = saved;
  }
  Vector row = Vector::Zero(n);
  for (int j = 0; j <= p; ++j) row(span - p + j) = local(j);
  return row;
}

Matrix design_matrix(const SplineBasis& basis, const Vector& times) {
  Matrix phi(times.size(), basis.size());
  for (Index i = 0; i < times.size(); ++i) phi.row(i) = basis_row(basis, times(i)).transpose();
  return phi;
}

}  // namespace ggpfr
