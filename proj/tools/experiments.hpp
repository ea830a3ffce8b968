#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "ggpfr/fit.hpp"
#include "ggpfr/predict.hpp"
#include "ggpfr/simulate.hpp"

namespace ggpfr::cli {

enum class PredictionMode { interpolate, extrapolate, new_batch };
std::string to_string(PredictionMode mode);
PredictionMode prediction_mode_from_string(const std::string& name);

struct Split {
  std::vector<Index> observed;
  std::vector<Index> held_out;
};

// INTERPOLATE: a random round(fraction*n) rows observed; EXTRAPOLATE: the
// first floor(fraction*n) rows; NEW_BATCH: nothing observed.
Split split_batch(Index n, PredictionMode mode, double fraction, std::uint64_t seed, std::uint64_t stream);

std::vector<PredictiveDistribution> predict_held_out(const FittedModel& model, const FunctionalBatch& batch,
                                                     const Split& split, bool laplace = false);

std::uint64_t replication_seed(std::uint64_t seed, int replication);

struct ReplicationSettings {
  Index M = 60;
  Index N = 40;
  int test_curves = 10;
  ModelSpec spec;
};

struct BinomialReplication {
  Index D = 0;
  Vector theta;  // natural scale
  double rmse = 0.0;
  double r = 0.0;
  double log_marginal = 0.0;
  bool converged = false;
};

// Fit on M simulated curves, then interpolate test curves with two thirds observed.
BinomialReplication binomial_replication(Scenario scenario, const ReplicationSettings& settings,
                                         std::uint64_t seed);

struct OrdinalReplication {
  Index D = 0;
  Vector theta;
  Vector thresholds;
  double interp_error = 0.0;
  double extrap_error = 0.0;
  bool converged = false;
};

// Fit on the first half of each curve (random half for interpolation), classify the rest.
OrdinalReplication ordinal_replication(const ReplicationSettings& settings, std::uint64_t seed);

struct ResultRow {
  std::string table;
  std::string setting;
  std::string replication;  // index, "mean", or "NA"
  std::string metric;
  std::string value;
};

std::string format_rows(const std::vector<ResultRow>& rows);

// Runs one paper table. Rows are appended to `rows` as they are produced so a
// failure leaves the partial output plus a marker row.
void reproduce_table(const std::string& table, const Config& config, std::vector<ResultRow>& rows);

const std::set<std::string>& reproduce_keys();

}  // namespace ggpfr::cli
