#pragma once

#include <functional>
#include <vector>

#include "ggpfr/types.hpp"

namespace ggpfr {

struct OptimizerSettings {
  int max_evals = 4000;
  double tol = 1e-7;       // relative objective change
  double fd_step = 1e-5;   // central differences on the flat vector
  int history = 7;
  int max_iterations = 200;
};

struct OptimResult {
  Vector x;
  double value = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // best value after each outer iteration
};

using ScalarObjective = std::function<double(const Vector&)>;

// Objective values at or below this are treated as failed evaluations.
inline constexpr double kPenaltyValue = -1e10;

// Central differences; a side that hits the penalty falls back to a
// one-sided difference.
Vector fd_gradient(const ScalarObjective& f, const Vector& x, double f_x, double h, int* evals = nullptr);

// Limited-memory BFGS ascent with Armijo backtracking.
OptimResult lbfgs_maximize(const ScalarObjective& f, const Vector& x0, const OptimizerSettings& settings = {});

}  // namespace ggpfr
