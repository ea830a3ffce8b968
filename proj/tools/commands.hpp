#pragma once

#include <map>
#include <string>
#include <vector>

#include "config.hpp"
#include "experiments.hpp"
#include "ggpfr/fit.hpp"

namespace ggpfr::cli {

struct SimulateArgs {
  std::string scenario = "BINOMIAL_SE";
  Index M = 60;
  Index N = 40;
  std::uint64_t seed = 1;
  Index subjects = 4;  // CLUSTERED
  double gamma = 0.5;  // CLUSTERED
  std::string out;
  std::string truth;  // default: <out>.truth.csv; parameters go to <truth>.params
};
void cmd_simulate(const SimulateArgs& args);

struct FitArgs {
  Config config;
  std::string data;
  std::string model;
  std::string report;  // optional
  bool clustered = false;
};
FittedModel cmd_fit(const FitArgs& args);
std::string format_fit_report(const FittedModel& model);

struct PredictArgs {
  std::string model;
  std::string data;  // rows with z = NA are predicted
  std::string out;
  bool laplace = false;
};
void cmd_predict(const PredictArgs& args);

struct EvaluateArgs {
  Config config;  // optional family check
  std::string model;
  std::string data;
  std::string truth;  // optional batch_id,t,y
  std::string out;
  PredictionMode mode = PredictionMode::interpolate;
  double fraction = 2.0 / 3.0;
  std::uint64_t seed = 1;
};
std::string cmd_evaluate(const EvaluateArgs& args);

struct ReproduceArgs {
  Config config;
  std::string table;
  std::string out;
};
std::string cmd_reproduce(const ReproduceArgs& args);

// batch_id -> latent y in file order.
std::map<std::string, std::vector<double>> load_truth(const std::string& path);

}  // namespace ggpfr::cli
