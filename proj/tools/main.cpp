#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "ggpfr/errors.hpp"

using namespace ggpfr;
using namespace ggpfr::cli;

namespace {

Config read_config(const std::string& path, const std::vector<std::string>& overrides) {
  Config c = path.empty() ? Config{} : Config::load(path);
  for (const auto& o : overrides) c.apply_override(o);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized Gaussian process functional regression"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value settings file");
    sub->add_option("--set", overrides, "override a setting, key=value");
  };

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "simulate a paper scenario");
  s->add_option("--scenario", sim.scenario, "BINOMIAL_SE, CHEBYSHEV, ORDINAL or CLUSTERED");
  s->add_option("--M", sim.M, "number of curves (clusters for CLUSTERED)");
  s->add_option("--N", sim.N, "points per curve");
  s->add_option("--seed", sim.seed);
  s->add_option("--subjects", sim.subjects, "subjects per cluster");
  s->add_option("--gamma", sim.gamma, "random-intercept variance");
  s->add_option("--out", sim.out)->required();
  s->add_option("--truth", sim.truth);

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "fit a model");
  add_config(f);
  f->add_option("--data", fit.data)->required();
  f->add_option("--model", fit.model)->required();
  f->add_option("--report", fit.report);
  f->add_flag("--clustered", fit.clustered);

  PredictArgs pred;
  auto* p = app.add_subcommand("predict", "predict rows with missing responses");
  p->add_option("--model", pred.model)->required();
  p->add_option("--data", pred.data)->required();
  p->add_option("--out", pred.out)->required();
  p->add_flag("--laplace", pred.laplace, "Laplace predictive path");

  EvaluateArgs ev;
  std::string mode = "INTERPOLATE";
  auto* e = app.add_subcommand("evaluate", "held-out prediction metrics");
  add_config(e);
  e->add_option("--model", ev.model)->required();
  e->add_option("--data", ev.data)->required();
  e->add_option("--truth", ev.truth, "batch_id,t,y file for latent-scale metrics");
  e->add_option("--out", ev.out);
  e->add_option("--mode", mode, "INTERPOLATE, EXTRAPOLATE or NEW_BATCH");
  e->add_option("--fraction", ev.fraction, "observed share of each curve");
  e->add_option("--seed", ev.seed);

  ReproduceArgs rep;
  long reps = 0;
  long seed = -1;
  auto* r = app.add_subcommand("reproduce", "rerun a paper table");
  add_config(r);
  r->add_option("--table", rep.table, "T1, T2, T3, T_OP or ORDINAL")->required();
  r->add_option("--reps", reps);
  r->add_option("--seed", seed);
  r->add_option("--out", rep.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 3;
  }

  try {
    if (*s) {
      cmd_simulate(sim);
    } else if (*f) {
      fit.config = read_config(config_path, overrides);
      const FittedModel m = cmd_fit(fit);
      if (fit.report.empty()) std::cout << format_fit_report(m);
    } else if (*p) {
      cmd_predict(pred);
    } else if (*e) {
      ev.config = read_config(config_path, overrides);
      ev.mode = prediction_mode_from_string(mode);
      const std::string text = cmd_evaluate(ev);
      if (ev.out.empty()) std::cout << text;
    } else if (*r) {
      rep.config = read_config(config_path, overrides);
      if (reps > 0) rep.config.set("reps", std::to_string(reps));
      if (seed >= 0) rep.config.set("seed", std::to_string(seed));
      const std::string text = cmd_reproduce(rep);
      if (rep.out.empty()) std::cout << text;
    }
  } catch (const Error& err) {
    std::cerr << "error[" << error_class_name(err.error_class()) << "]: " << err.what() << '\n';
    return exit_code_for(err.error_class());
  } catch (const std::exception& err) {
    std::cerr << "error[internal]: " << err.what() << '\n';
    return 4;
  }
  return 0;
}
