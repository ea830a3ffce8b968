#pragma once

#include <functional>

#include "ggpfr/types.hpp"

namespace ggpfr {

// Probabilists' Gauss-Hermite rule: sum_i w_i f(x_i) ~ E f(X), X ~ N(0,1).
struct GaussHermiteRule {
  Vector nodes;
  Vector weights;
};

// Nodes and weights from the eigen-decomposition of the Jacobi matrix; cached per size.
const GaussHermiteRule& gauss_hermite(int n);

// E f(T) for T ~ N(mean, var); var == 0 evaluates f at the mean.
double normal_expectation(const std::function<double(double)>& f, double mean, double var, int nodes = 30);

}  // namespace ggpfr
