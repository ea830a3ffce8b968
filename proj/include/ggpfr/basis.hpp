#pragma once

#include <string>

#include "ggpfr/types.hpp"

namespace ggpfr {

enum class KnotMethod { equal_spaced, quantile };

std::string to_string(KnotMethod method);
KnotMethod knot_method_from_string(const std::string& name);

// Clamped B-spline basis: boundary knots repeated degree+1 times.
struct SplineBasis {
  int degree = 3;
  Vector knots;

  Index size() const { return knots.size() - degree - 1; }  // D
  double lower() const { return knots(0); }
  double upper() const { return knots(knots.size() - 1); }
  Vector interior_knots() const { return knots.segment(degree + 1, knots.size() - 2 * (degree + 1)); }
};

// Cubic basis with D functions over [min t, max t].
SplineBasis place_knots(const Vector& times_all, Index D, KnotMethod method, int degree = 3);
SplineBasis make_basis(const Vector& interior, double lower, double upper, int degree = 3);

// Basis values at t; t outside the knot range is clamped to the boundary.
Vector basis_row(const SplineBasis& basis, double t);
Matrix design_matrix(const SplineBasis& basis, const Vector& times);

// Type-7 sample quantile (linear interpolation between order statistics).
double sample_quantile(Vector sorted_values, double prob);

}  // namespace ggpfr
