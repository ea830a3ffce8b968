#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ggpfr/data.hpp"
#include "ggpfr/kernels.hpp"
#include "ggpfr/types.hpp"

namespace ggpfr {

enum class Scenario { binomial_se, chebyshev, ordinal, clustered };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

struct SimConfig {
  Scenario scenario = Scenario::binomial_se;
  Index M = 60;
  Index N = 40;
  std::uint64_t seed = 1;
  // Batch m draws from stream first_stream + m, so test curves can come
  // from streams disjoint from the training curves.
  std::uint64_t first_stream = 0;
  Index subjects_per_cluster = 4;  // clustered only
  double gamma = 0.5;              // clustered only

  void check() const;
};

struct SimTruth {
  std::vector<Vector> latent_y;  // per batch, aligned with the batch rows
  KernelParams theta;
  Vector thresholds;
  Vector gamma;
};

struct SimResult {
  Dataset data;
  SimTruth truth;
};

// t_i = lo + (hi - lo) i / (N + 1), i = 1..N.
Vector open_grid(double lo, double hi, Index N);

SimResult sim_binomial_se(Index M, Index N, std::uint64_t seed, std::uint64_t first_stream = 0);
SimResult sim_chebyshev(Index M, Index N, std::uint64_t seed, std::uint64_t first_stream = 0);
SimResult sim_ordinal(Index M, Index N, std::uint64_t seed, std::uint64_t first_stream = 0);
// Random-intercept clusters (w = 1) around the binomial SE scenario.
SimResult sim_clustered(Index clusters, Index subjects, Index N, double gamma, std::uint64_t seed,
                        std::uint64_t first_stream = 0);
SimResult simulate(const SimConfig& config);

// Orthonormal polynomials on the grid (columns, degree 0..count-1), sum_t phi_j(t)^2 = 1.
Matrix discrete_orthonormal_polynomials(const Vector& grid, Index count);
Matrix chebyshev_covariance(const Vector& grid, Index terms = 10);

inline constexpr double kBinomialW = 1.0, kBinomialV = 0.04, kBinomialA = 0.1;
inline constexpr double kOrdinalW = 0.33, kOrdinalV = 0.0049, kOrdinalA = 0.01;
inline constexpr double kOrdinalLow = 0.2, kOrdinalHigh = 0.7;
inline constexpr double kSimJitter = 1e-6;

struct Metrics {
  double rmse = 0.0;
  double pearson_r = 0.0;
  double error_rate = 0.0;
};

double rmse(const Vector& pred, const Vector& truth);
double pearson(const Vector& a, const Vector& b);
double error_rate(const std::vector<int>& pred, const std::vector<int>& truth);

// Truth (latent y) per batch in long format: batch_id,t,y.
std::string format_truth_csv(const SimResult& sim);
std::string format_truth_params(const SimResult& sim);

}  // namespace ggpfr
