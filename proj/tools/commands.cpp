#include "commands.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ggpfr/data.hpp"
#include "ggpfr/errors.hpp"
#include "ggpfr/mixed.hpp"
#include "ggpfr/model_io.hpp"
#include "ggpfr/predict.hpp"
#include "ggpfr/simulate.hpp"

namespace ggpfr::cli {

namespace {

std::string join(const Vector& v) {
  std::string s;
  for (Index k = 0; k < v.size(); ++k) s += (k ? " " : "") + format_real(v(k));
  return s;
}

// Ordinal data are read before the thresholds (and so the category count) are
// known; fitting validates the responses against the resolved family.
Dataset load_for_fit(const std::string& path, const ObservationFamily& family, bool clustered) {
  CsvSchema schema;
  schema.family = family;
  schema.require_cluster = clustered;
  if (family.is_ordinal() && family.thresholds.size() == 0) schema.family = ObservationFamily::gaussian(1.0);
  Dataset data = load_csv(path, schema);
  data.family_tag = family.kind;
  return data;
}

std::string na_or(double v) { return std::isfinite(v) ? format_real(v) : "NA"; }

void write_prediction(std::ostringstream& out, const std::string& id, double t, const PredictiveDistribution& p,
                      const ObservationFamily& family) {
  out << id << ',' << format_real(t) << ',' << format_real(p.latent_y()) << ',' << format_real(p.latent_var) << ','
      << format_real(p.response_mean) << ',' << format_real(p.response_var) << ',' << classify(p, family);
  for (Index j = 0; j < p.category_probs.size(); ++j) out << ',' << format_real(p.category_probs(j));
  out << '\n';
}

}  // namespace

void cmd_simulate(const SimulateArgs& args) {
  if (args.out.empty()) fail(ErrorClass::invalid_argument, "simulate needs --out");
  SimConfig sc;
  sc.scenario = scenario_from_string(args.scenario);
  sc.M = args.M;
  sc.N = args.N;
  sc.seed = args.seed;
  sc.subjects_per_cluster = args.subjects;
  sc.gamma = args.gamma;
  const SimResult sim = simulate(sc);
  const std::string truth = args.truth.empty() ? args.out + ".truth.csv" : args.truth;
  save_csv(sim.data, args.out);
  write_text_file(truth, format_truth_csv(sim));
  write_text_file(truth + ".params", format_truth_params(sim));
}

std::string format_fit_report(const FittedModel& model) {
  std::ostringstream out;
  out << "family=" << to_string(model.family.kind) << '\n';
  out << "kernel.kind=" << to_string(model.theta.kind) << '\n';
  out << "theta=" << join(model.theta.values()) << '\n';
  if (model.family.is_ordinal()) out << "thresholds=" << join(model.family.thresholds) << '\n';
  if (model.clustered) out << "gamma=" << join(model.gamma) << '\n';
  out << "objective=" << to_string(model.objective) << '\n';
  out << "basis.D=" << model.basis.size() << '\n';
  out << "log_marginal=" << format_real(model.log_marginal) << '\n';
  out << "bic=" << format_real(model.bic) << '\n';
  out << "regret=" << format_real(model.regret) << '\n';
  out << "parameters=" << model.num_parameters() << '\n';
  out << "batches=" << model.num_groups() << '\n';
  out << "evaluations=" << model.evaluations << '\n';
  out << "penalties=" << model.penalty_count << '\n';
  out << "converged=" << (model.converged ? "true" : "false") << '\n';
  return out.str();
}

FittedModel cmd_fit(const FitArgs& args) {
  args.config.require_known(model_keys());
  if (args.data.empty() || args.model.empty()) fail(ErrorClass::invalid_argument, "fit needs --data and --model");
  const ObservationFamily family = family_from(args.config);
  Dataset data = load_for_fit(args.data, family, args.clustered);
  const ModelSpec spec = model_spec_from(args.config, data.num_covariates());
  FittedModel model;
  if (args.clustered) {
    Vector gamma;
    if (args.config.has("gamma")) gamma = args.config.reals("gamma");
    model = fit_clustered(cluster_dataset(data, gamma), spec, true);
  } else {
    model = fit(data, spec);
  }
  save_model(model, args.model);
  if (!args.report.empty()) write_text_file(args.report, format_fit_report(model));
  return model;
}

void cmd_predict(const PredictArgs& args) {
  if (args.model.empty() || args.data.empty() || args.out.empty())
    fail(ErrorClass::invalid_argument, "predict needs --model, --data and --out");
  const FittedModel model = load_model(args.model);
  CsvSchema schema;
  schema.family = model.family;
  schema.require_cluster = model.clustered;
  schema.allow_missing_response = true;
  const Dataset data = load_csv(args.data, schema);
  if (data.num_covariates() != model.theta.input_dim)
    fail(ErrorClass::dimension, "data has a different number of functional covariates than the model");

  std::ostringstream out;
  out << "batch_id,t,latent_mean,latent_var,response_mean,response_var,predicted_class";
  for (int j = 0; j < model.family.num_categories(); ++j) out << ",p_" << j;
  out << '\n';

  auto observed_rows = [](const FunctionalBatch& b) {
    std::vector<Index> obs, query;
    for (Index i = 0; i < b.size(); ++i) (std::isnan(b.responses(i)) ? query : obs).push_back(i);
    return std::pair{obs, query};
  };

  if (!model.clustered) {
    for (const auto& b : data.batches) {
      const auto [obs, query] = observed_rows(b);
      if (query.empty()) continue;
      const Split split{obs, query};
      const auto preds = predict_held_out(model, b, split, args.laplace);
      for (std::size_t k = 0; k < query.size(); ++k) write_prediction(out, b.batch_id, b.times(query[k]), preds[k], model.family);
    }
  } else {
    if (args.laplace) fail(ErrorClass::invalid_argument, "--laplace is not available for clustered models");
    const ClusteredDataset cd = cluster_dataset(data, model.gamma);
    for (const auto& cluster : cd.clusters) {
      Cluster observed{cluster.cluster_id, {}};
      for (const auto& s : cluster.subjects) {
        const auto obs = observed_rows(s).first;
        if (!obs.empty()) observed.subjects.push_back(s.select(obs));
      }
      for (const auto& s : cluster.subjects) {
        const auto query = observed_rows(s).second;
        if (query.empty()) continue;
        if (observed.subjects.empty())
          fail(ErrorClass::invalid_argument, "cluster '" + cluster.cluster_id + "' has no observed rows");
        for (Index i : query) {
          const auto p = predict_clustered(model, observed, s.batch_id, s.times(i), s.covariates.row(i).transpose(),
                                           s.re_covariates.row(i).transpose(), s.scalar_covariates);
          write_prediction(out, s.batch_id, s.times(i), p, model.family);
        }
      }
    }
  }
  write_text_file(args.out, out.str());
}

std::map<std::string, std::vector<double>> load_truth(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("batch_id,t,y", 0) != 0)
    fail(ErrorClass::schema, "truth file must start with 'batch_id,t,y'");
  std::map<std::string, std::vector<double>> out;
  int no = 1;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto c1 = line.find(','), c2 = line.rfind(',');
    if (c1 == std::string::npos || c1 == c2) fail(ErrorClass::parse, "truth line " + std::to_string(no) + ": expected 3 fields");
    std::string y = line.substr(c2 + 1);
    if (!y.empty() && y.back() == '\r') y.pop_back();
    out[line.substr(0, c1)].push_back(parse_real(y));
  }
  return out;
}

std::string cmd_evaluate(const EvaluateArgs& args) {
  if (args.model.empty() || args.data.empty()) fail(ErrorClass::invalid_argument, "evaluate needs --model and --data");
  const FittedModel model = load_model(args.model);
  if (model.clustered) fail(ErrorClass::invalid_argument, "evaluate supports independent-batch models only");
  if (args.config.has("family") && family_kind_from_string(args.config.text("family")) != model.family.kind)
    fail(ErrorClass::consistency, "family '" + args.config.text("family") + "' does not match the model (" +
                                      to_string(model.family.kind) + ")");
  CsvSchema schema;
  schema.family = model.family;
  const Dataset data = load_csv(args.data, schema);
  std::map<std::string, std::vector<double>> truth;
  if (!args.truth.empty()) truth = load_truth(args.truth);

  std::ostringstream out;
  out << "batch_id,n_observed,n_held_out,rmse,pearson_r,error_rate\n";
  double sum_rmse = 0, sum_r = 0, sum_err = 0;
  int n_rmse = 0, n_r = 0, n_err = 0;
  for (std::size_t m = 0; m < data.batches.size(); ++m) {
    const auto& b = data.batches[m];
    const Split split = split_batch(b.size(), args.mode, args.fraction, args.seed, m);
    const auto preds = predict_held_out(model, b, split);
    const Index h = static_cast<Index>(split.held_out.size());
    Vector pred(h), target(h);
    std::vector<int> cls, want;
    const std::vector<double>* y = nullptr;
    if (!truth.empty()) {
      auto it = truth.find(b.batch_id);
      if (it == truth.end() || static_cast<Index>(it->second.size()) != b.size())
        fail(ErrorClass::consistency, "truth file does not cover batch '" + b.batch_id + "'");
      y = &it->second;
    }
    for (Index k = 0; k < h; ++k) {
      const Index i = split.held_out[static_cast<std::size_t>(k)];
      const auto& p = preds[static_cast<std::size_t>(k)];
      // With a truth file compare latent y; otherwise the response scale.
      pred(k) = y ? p.latent_y() : p.response_mean;
      target(k) = y ? (*y)[static_cast<std::size_t>(i)] : b.responses(i);
      cls.push_back(classify(p, model.family));
      want.push_back(static_cast<int>(std::lround(b.responses(i))));
    }
    const double e = rmse(pred, target);
    double r = std::numeric_limits<double>::quiet_NaN();
    if (h >= 2) {
      try {
        r = pearson(pred, target);
      } catch (const Error&) {
      }
    }
    const bool discrete = model.family.kind != FamilyKind::gaussian_identity;
    const double err = discrete ? error_rate(cls, want) : std::numeric_limits<double>::quiet_NaN();
    out << b.batch_id << ',' << split.observed.size() << ',' << h << ',' << na_or(e) << ',' << na_or(r) << ','
        << na_or(err) << '\n';
    sum_rmse += e, ++n_rmse;
    if (std::isfinite(r)) sum_r += r, ++n_r;
    if (std::isfinite(err)) sum_err += err, ++n_err;
  }
  auto mean = [](double s, int n) { return n ? format_real(s / n) : std::string("NA"); };
  out << "mean,NA,NA," << mean(sum_rmse, n_rmse) << ',' << mean(sum_r, n_r) << ',' << mean(sum_err, n_err) << '\n';
  if (!args.out.empty()) write_text_file(args.out, out.str());
  return out.str();
}

std::string cmd_reproduce(const ReproduceArgs& args) {
  std::vector<ResultRow> rows;
  try {
    reproduce_table(args.table, args.config, rows);
  } catch (const Error& e) {
    rows.push_back({args.table, "FAILED", "NA", error_class_name(e.error_class()), "NA"});
    if (!args.out.empty()) write_text_file(args.out, format_rows(rows));
    throw;
  }
  const std::string text = format_rows(rows);
  if (!args.out.empty()) write_text_file(args.out, text);
  return text;
}

}  // namespace ggpfr::cli
