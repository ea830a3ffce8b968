#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ggpfr/data.hpp"
#include "ggpfr/errors.hpp"
#include "ggpfr/random.hpp"

namespace ggpfr::cli {

namespace {

constexpr std::uint64_t kTestStream = 1000000;
constexpr double kInterpolateFraction = 2.0 / 3.0;
constexpr double kOrdinalFraction = 0.5;

int default_reps(const std::string& table) { return table == "ORDINAL" ? 30 : 10; }

std::string kernel_label(KernelKind kind) {
  switch (kind) {
    case KernelKind::se_linear: return "SE";
    case KernelKind::matern32: return "MC";
    case KernelKind::rational_quadratic: return "RQ";
    case KernelKind::piecewise_poly_q2: return "PP";
  }
  return "?";
}

struct Accumulator {
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> values;
  void add(const std::string& metric, double v) {
    if (!values.count(metric)) order.push_back(metric);
    values[metric].push_back(v);
  }
};

void emit(std::vector<ResultRow>& rows, const std::string& table, const std::string& setting, int rep,
          const std::string& metric, double value, Accumulator& acc) {
  rows.push_back({table, setting, std::to_string(rep), metric, format_real(value)});
  acc.add(metric, value);
}

void emit_means(std::vector<ResultRow>& rows, const std::string& table, const std::string& setting,
                const Accumulator& acc) {
  for (const auto& m : acc.order) {
    const auto& v = acc.values.at(m);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    rows.push_back({table, setting, "mean", m, format_real(mean)});
  }
}

void emit_placeholder(std::vector<ResultRow>& rows, const std::string& table) {
  for (const char* m : {"rmse", "r"}) rows.push_back({table, "NP", "NA", m, "NA"});
}

std::vector<Index> sizes_from(const Config& config, const std::string& key, std::vector<Index> fallback) {
  if (!config.has(key)) return fallback;
  std::vector<Index> out;
  for (double v : config.reals(key)) out.push_back(static_cast<Index>(v));
  return out;
}

std::vector<KernelKind> kernels_from(const Config& config) {
  if (!config.has("kernels"))
    return {KernelKind::se_linear, KernelKind::matern32, KernelKind::rational_quadratic,
            KernelKind::piecewise_poly_q2};
  std::vector<KernelKind> out;
  for (const auto& w : config.words("kernels")) out.push_back(kernel_kind_from_string(w));
  return out;
}

SimResult simulate_scenario(Scenario scenario, Index M, Index N, std::uint64_t seed, std::uint64_t first) {
  switch (scenario) {
    case Scenario::binomial_se: return sim_binomial_se(M, N, seed, first);
    case Scenario::chebyshev: return sim_chebyshev(M, N, seed, first);
    case Scenario::ordinal: return sim_ordinal(M, N, seed, first);
    default: fail(ErrorClass::invalid_argument, "scenario not supported for replications");
  }
}

double class_error(const FittedModel& model, const FunctionalBatch& batch, const Split& split) {
  const auto preds = predict_held_out(model, batch, split);
  std::vector<int> got, want;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    got.push_back(classify(preds[k], model.family));
    want.push_back(static_cast<int>(batch.responses(split.held_out[k])));
  }
  return error_rate(got, want);
}

// Replication loop shared by every table. `body` runs one replication with the
// spec adjusted for BIC reuse and returns the selected D.
template <typename Body>
void run_setting(const std::string& table, const std::string& setting, const Config& config, ModelSpec spec,
                 std::vector<ResultRow>& rows, Body body) {
  const int reps = static_cast<int>(config.integer("reps", default_reps(table)));
  if (reps < 1) fail(ErrorClass::invalid_argument, "reps must be at least 1");
  const std::uint64_t seed = static_cast<std::uint64_t>(config.integer("seed", 1));
  const std::string bic = config.text("bic", "first");
  if (bic != "first" && bic != "each") fail(ErrorClass::invalid_argument, "bic must be 'first' or 'each'");
  Accumulator acc;
  for (int rep = 1; rep <= reps; ++rep) {
    const std::uint64_t rs = replication_seed(seed, rep);
    spec.seed = rs;
    const Index D = body(spec, rs, rep, acc);
    if (bic == "first" && !spec.basis.D) spec.basis.D = D;
  }
  emit_means(rows, table, setting, acc);
}

}  // namespace

std::string to_string(PredictionMode mode) {
  switch (mode) {
    case PredictionMode::interpolate: return "INTERPOLATE";
    case PredictionMode::extrapolate: return "EXTRAPOLATE";
    case PredictionMode::new_batch: return "NEW_BATCH";
  }
  return "?";
}

PredictionMode prediction_mode_from_string(const std::string& name) {
  for (auto m : {PredictionMode::interpolate, PredictionMode::extrapolate, PredictionMode::new_batch})
    if (to_string(m) == name) return m;
  fail(ErrorClass::invalid_argument, "unknown prediction mode '" + name + "'");
}

Split split_batch(Index n, PredictionMode mode, double fraction, std::uint64_t seed, std::uint64_t stream) {
  if (n < 1) fail(ErrorClass::invalid_argument, "cannot split an empty batch");
  if (!(fraction > 0 && fraction < 1)) fail(ErrorClass::invalid_argument, "fraction must lie in (0, 1)");
  Split s;
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (mode == PredictionMode::new_batch) {
    s.held_out = idx;
    return s;
  }
  Index keep = 0;
  if (mode == PredictionMode::interpolate) {
    keep = static_cast<Index>(std::lround(fraction * static_cast<double>(n)));
    Rng rng = Rng::stream(seed, stream);
    for (Index i = n - 1; i > 0; --i)
      std::swap(idx[static_cast<std::size_t>(i)], idx[rng.below(static_cast<std::uint64_t>(i + 1))]);
  } else {
    keep = static_cast<Index>(std::floor(fraction * static_cast<double>(n)));
  }
  keep = std::clamp<Index>(keep, 1, n - 1 > 0 ? n - 1 : 1);
  s.observed.assign(idx.begin(), idx.begin() + keep);
  s.held_out.assign(idx.begin() + keep, idx.end());
  std::sort(s.observed.begin(), s.observed.end());
  std::sort(s.held_out.begin(), s.held_out.end());
  return s;
}

std::vector<PredictiveDistribution> predict_held_out(const FittedModel& model, const FunctionalBatch& batch,
                                                     const Split& split, bool laplace) {
  if (model.clustered) fail(ErrorClass::invalid_argument, "held-out evaluation needs an independent-batch model");
  std::vector<PredictiveDistribution> out;
  out.reserve(split.held_out.size());
  auto x_at = [&](Index i) -> Vector { return batch.covariates.row(i).transpose(); };
  if (split.observed.empty()) {
    for (Index i : split.held_out)
      out.push_back(predict_new_batch(model, batch.times(i), x_at(i), batch.scalar_covariates));
    return out;
  }
  const FunctionalBatch obs = batch.select(split.observed);
  if (laplace) {
    for (Index i : split.held_out)
      out.push_back(predict_response_laplace(model, obs, batch.times(i), x_at(i), batch.scalar_covariates));
    return out;
  }
  BatchPredictor predictor(model, obs);
  for (Index i : split.held_out) out.push_back(predictor.predict(batch.times(i), x_at(i), batch.scalar_covariates));
  return out;
}

std::uint64_t replication_seed(std::uint64_t seed, int replication) {
  return splitmix64(splitmix64(seed) + static_cast<std::uint64_t>(replication));
}

BinomialReplication binomial_replication(Scenario scenario, const ReplicationSettings& settings,
                                         std::uint64_t seed) {
  const SimResult sim = simulate_scenario(scenario, settings.M, settings.N, seed, 0);
  const FittedModel model = fit(sim.data, settings.spec);
  BinomialReplication out;
  out.D = model.basis.size();
  out.theta = model.theta.values();
  out.log_marginal = model.log_marginal;
  out.converged = model.converged;
  for (int k = 0; k < settings.test_curves; ++k) {
    const std::uint64_t stream = kTestStream + static_cast<std::uint64_t>(k);
    const SimResult test = simulate_scenario(scenario, 1, settings.N, seed, stream);
    const FunctionalBatch& b = test.data.batches[0];
    const Split split = split_batch(b.size(), PredictionMode::interpolate, kInterpolateFraction, seed, stream);
    const auto preds = predict_held_out(model, b, split);
    Vector pred(static_cast<Index>(preds.size())), truth(pred.size());
    for (std::size_t j = 0; j < preds.size(); ++j) {
      pred(static_cast<Index>(j)) = preds[j].latent_y();
      truth(static_cast<Index>(j)) = test.truth.latent_y[0](split.held_out[j]);
    }
    out.rmse += rmse(pred, truth);
    out.r += pearson(pred, truth);
  }
  if (settings.test_curves > 0) {
    out.rmse /= settings.test_curves;
    out.r /= settings.test_curves;
  }
  return out;
}

OrdinalReplication ordinal_replication(const ReplicationSettings& settings, std::uint64_t seed) {
  const SimResult sim = sim_ordinal(settings.M, settings.N, seed);
  const FittedModel model = fit(sim.data, settings.spec);
  OrdinalReplication out;
  out.D = model.basis.size();
  out.theta = model.theta.values();
  out.thresholds = model.family.thresholds;
  out.converged = model.converged;
  for (int k = 0; k < settings.test_curves; ++k) {
    const std::uint64_t stream = kTestStream + static_cast<std::uint64_t>(k);
    const SimResult test = sim_ordinal(1, settings.N, seed, stream);
    const FunctionalBatch& b = test.data.batches[0];
    out.interp_error +=
        class_error(model, b, split_batch(b.size(), PredictionMode::interpolate, kOrdinalFraction, seed, stream));
    out.extrap_error +=
        class_error(model, b, split_batch(b.size(), PredictionMode::extrapolate, kOrdinalFraction, seed, stream));
  }
  out.interp_error /= settings.test_curves;
  out.extrap_error /= settings.test_curves;
  return out;
}

std::string format_rows(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "table,setting,replication,metric,value\n";
  for (const auto& r : rows)
    out << r.table << ',' << r.setting << ',' << r.replication << ',' << r.metric << ',' << r.value << '\n';
  return out.str();
}

const std::set<std::string>& reproduce_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k = model_keys();
    k.insert({"reps", "M", "N", "test_curves", "bic", "kernels"});
    return k;
  }();
  return keys;
}

void reproduce_table(const std::string& table, const Config& config, std::vector<ResultRow>& rows) {
  config.require_known(reproduce_keys());
  Config cfg = config;
  if (!cfg.has("restarts")) cfg.set("restarts", "0");
  if (table == "ORDINAL") {
    if (!cfg.has("family")) cfg.set("family", "ORDINAL_PROBIT");
  }
  ModelSpec spec = model_spec_from(cfg);
  ReplicationSettings rs;
  rs.test_curves = static_cast<int>(cfg.integer("test_curves", 50));
  if (rs.test_curves < 1) fail(ErrorClass::invalid_argument, "test_curves must be at least 1");

  if (table == "T1" || table == "T2") {
    rs.M = cfg.integer("M", 60);
    for (Index N : sizes_from(cfg, "N", {20, 40, 60})) {
      rs.N = N;
      const std::string setting = "N=" + std::to_string(N);
      run_setting(table, setting, cfg, spec, rows,
                  [&](const ModelSpec& s, std::uint64_t seed, int rep, Accumulator& acc) {
                    ReplicationSettings local = rs;
                    local.spec = s;
                    if (table == "T1") local.test_curves = 0;
                    const auto res = binomial_replication(Scenario::binomial_se, local, seed);
                    if (table == "T1") {
                      if (res.theta.size() == 3) {
                        emit(rows, table, setting, rep, "w1", res.theta(0), acc);
                        emit(rows, table, setting, rep, "v1", res.theta(1), acc);
                        emit(rows, table, setting, rep, "a1", res.theta(2), acc);
                      } else {
                        for (Index j = 0; j < res.theta.size(); ++j)
                          emit(rows, table, setting, rep, "theta" + std::to_string(j + 1), res.theta(j), acc);
                      }
                      emit(rows, table, setting, rep, "log_marginal", res.log_marginal, acc);
                    } else {
                      emit(rows, table, setting, rep, "rmse", res.rmse, acc);
                      emit(rows, table, setting, rep, "r", res.r, acc);
                    }
                    emit(rows, table, setting, rep, "D", static_cast<double>(res.D), acc);
                    return res.D;
                  });
    }
    return;
  }

  if (table == "T3" || table == "T_OP") {
    const bool op = table == "T_OP";
    rs.M = cfg.integer("M", op ? 100 : 60);
    rs.N = sizes_from(cfg, "N", {op ? Index{50} : Index{40}}).front();
    for (KernelKind kind : kernels_from(cfg)) {
      ModelSpec ks = spec;
      if (ks.kernel.kind != kind) ks.kernel = KernelParams{kind, 1, {}};
      run_setting(table, kernel_label(kind), cfg, ks, rows,
                  [&](const ModelSpec& s, std::uint64_t seed, int rep, Accumulator& acc) {
                    ReplicationSettings local = rs;
                    local.spec = s;
                    const auto res =
                        binomial_replication(op ? Scenario::chebyshev : Scenario::binomial_se, local, seed);
                    emit(rows, table, kernel_label(kind), rep, "rmse", res.rmse, acc);
                    emit(rows, table, kernel_label(kind), rep, "r", res.r, acc);
                    emit(rows, table, kernel_label(kind), rep, "D", static_cast<double>(res.D), acc);
                    return res.D;
                  });
    }
    emit_placeholder(rows, table);
    return;
  }

  if (table == "ORDINAL") {
    rs.M = cfg.integer("M", 40);
    rs.N = sizes_from(cfg, "N", {40}).front();
    const std::string setting = "N=" + std::to_string(rs.N);
    run_setting(table, setting, cfg, spec, rows,
                [&](const ModelSpec& s, std::uint64_t seed, int rep, Accumulator& acc) {
                  ReplicationSettings local = rs;
                  local.spec = s;
                  const auto res = ordinal_replication(local, seed);
                  emit(rows, table, setting, rep, "interp_error", res.interp_error, acc);
                  emit(rows, table, setting, rep, "extrap_error", res.extrap_error, acc);
                  for (Index j = 0; j < res.thresholds.size(); ++j)
                    emit(rows, table, setting, rep, "b" + std::to_string(j + 1), res.thresholds(j), acc);
                  emit(rows, table, setting, rep, "D", static_cast<double>(res.D), acc);
                  return res.D;
                });
    return;
  }
  fail(ErrorClass::invalid_argument, "unknown table '" + table + "' (expected T1, T2, T3, T_OP or ORDINAL)");
}

}  // namespace ggpfr::cli
