#include "ggpfr/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Cholesky>

#include "ggpfr/errors.hpp"
#include "ggpfr/random.hpp"
#include "ggpfr/special.hpp"

namespace ggpfr {

namespace {

Vector draw_gp(const Matrix& C, Rng& rng) {
  Matrix K = C;
  K.diagonal().array() += kSimJitter;
  Eigen::LLT<Matrix> llt(K);
  if (llt.info() != Eigen::Success) fail(ErrorClass::conditioning, "simulation covariance not positive definite");
  Vector xi(C.rows());
  for (Index i = 0; i < xi.size(); ++i) xi(i) = rng.normal();
  return llt.matrixL() * xi;
}

FunctionalBatch make_batch(const std::string& id, const Vector& t) {
  FunctionalBatch b;
  b.batch_id = id;
  b.times = t;
  b.covariates = t;
  b.scalar_covariates = Vector::Ones(1);
  b.responses.resize(t.size());
  return b;
}

std::string batch_name(std::uint64_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "b%05llu", static_cast<unsigned long long>(k));
  return buf;
}

Dataset empty_dataset(FamilyKind kind) {
  Dataset d;
  d.family_tag = kind;
  d.covariate_names = {"x1"};
  return d;
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::binomial_se: return "BINOMIAL_SE";
    case Scenario::chebyshev: return "CHEBYSHEV";
    case Scenario::ordinal: return "ORDINAL";
    case Scenario::clustered: return "CLUSTERED";
  }
  return "";
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "BINOMIAL_SE") return Scenario::binomial_se;
  if (name == "CHEBYSHEV") return Scenario::chebyshev;
  if (name == "ORDINAL") return Scenario::ordinal;
  if (name == "CLUSTERED") return Scenario::clustered;
  fail(ErrorClass::schema, "unknown scenario '" + name + "'");
}

void SimConfig::check() const {
  if (M < 1) fail(ErrorClass::invalid_argument, "M must be at least 1");
  if (N < 2) fail(ErrorClass::invalid_argument, "N must be at least 2");
  if (scenario == Scenario::clustered && subjects_per_cluster < 1)
    fail(ErrorClass::invalid_argument, "subjects per cluster must be at least 1");
  if (!(gamma >= 0)) fail(ErrorClass::invalid_argument, "gamma must be non-negative");
}

Vector open_grid(double lo, double hi, Index N) {
  Vector t(N);
  for (Index i = 0; i < N; ++i) t(i) = lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(N + 1);
  return t;
}

SimResult sim_binomial_se(Index M, Index N, std::uint64_t seed, std::uint64_t first_stream) {
  SimResult out;
  out.data = empty_dataset(FamilyKind::bernoulli_logit);
  out.truth.theta = KernelParams::se_linear(Vector::Constant(1, kBinomialW), kBinomialV, kBinomialA);
  const Vector t = open_grid(-4.0, 4.0, N);
  const Matrix C = gram_matrix(t, out.truth.theta);
  for (Index m = 0; m < M; ++m) {
    const std::uint64_t k = first_stream + static_cast<std::uint64_t>(m);
    Rng rng = Rng::stream(seed, k);
    const Vector tau = draw_gp(C, rng);
    FunctionalBatch b = make_batch(batch_name(k), t);
    Vector y(N);
    for (Index i = 0; i < N; ++i) {
      const double s = std::sin(0.5 * t(i));
      y(i) = 0.8 * s * s * s + tau(i);
      b.responses(i) = rng.uniform() < logistic(y(i)) ? 1.0 : 0.0;
    }
    out.data.batches.push_back(std::move(b));
    out.truth.latent_y.push_back(std::move(y));
  }
  return out;
}

Matrix discrete_orthonormal_polynomials(const Vector& grid, Index count) {
  const Index n = grid.size();
  if (count > n) fail(ErrorClass::invalid_argument, "more polynomials than grid points");
  const double lo = grid.minCoeff(), hi = grid.maxCoeff();
  const Vector s = ((grid.array() - lo) * (2.0 / (hi - lo)) - 1.0).matrix();
  Matrix Q(n, count);
  for (Index j = 0; j < count; ++j) {
    Vector v = j == 0 ? Vector::Ones(n) : Vector(Q.col(j - 1).cwiseProduct(s));
    // Two passes of modified Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass)
      for (Index k = 0; k < j; ++k) v -= Q.col(k).dot(v) * Q.col(k);
    Q.col(j) = v / v.norm();
  }
  return Q;
}

Matrix chebyshev_covariance(const Vector& grid, Index terms) {
  const Matrix Q = discrete_orthonormal_polynomials(grid, terms);
  Vector alpha(terms);
  for (Index j = 0; j < terms; ++j) alpha(j) = std::pow(static_cast<double>(j + 1), -1.5);
  return Q * alpha.asDiagonal() * Q.transpose();
}

SimResult sim_chebyshev(Index M, Index N, std::uint64_t seed, std::uint64_t first_stream) {
  SimResult out;
  out.data = empty_dataset(FamilyKind::bernoulli_logit);
  Vector t(N);
  for (Index i = 0; i < N; ++i) t(i) = 5.0 * static_cast<double>(i) / static_cast<double>(N - 1);
  const Matrix C = chebyshev_covariance(t, std::min<Index>(10, N));
  const double pi = 3.141592653589793238463;
  for (Index m = 0; m < M; ++m) {
    const std::uint64_t k = first_stream + static_cast<std::uint64_t>(m);
    Rng rng = Rng::stream(seed, k);
    const Vector tau = draw_gp(C, rng);
    FunctionalBatch b = make_batch(batch_name(k), t);
    Vector y(N);
    for (Index i = 0; i < N; ++i) {
      y(i) = 2.0 * std::sqrt(0.4) * std::sin(0.4 * pi * t(i)) + tau(i);
      b.responses(i) = rng.uniform() < logistic(y(i)) ? 1.0 : 0.0;
    }
    out.data.batches.push_back(std::move(b));
    out.truth.latent_y.push_back(std::move(y));
  }
  return out;
}

SimResult sim_ordinal(Index M, Index N, std::uint64_t seed, std::uint64_t first_stream) {
  SimResult out;
  out.data = empty_dataset(FamilyKind::ordinal_probit);
  out.truth.theta = KernelParams::se_linear(Vector::Constant(1, kOrdinalW), kOrdinalV, kOrdinalA);
  out.truth.thresholds = Vector(2);
  out.truth.thresholds << kOrdinalLow, kOrdinalHigh;
  const Vector t = open_grid(-4.0, 4.0, N);
  const Matrix C = gram_matrix(t, out.truth.theta);
  for (Index m = 0; m < M; ++m) {
    const std::uint64_t k = first_stream + static_cast<std::uint64_t>(m);
    Rng rng = Rng::stream(seed, k);
    const Vector tau = draw_gp(C, rng);
    FunctionalBatch b = make_batch(batch_name(k), t);
    Vector y(N);
    for (Index i = 0; i < N; ++i) {
      y(i) = 1.0 / (1.0 + std::exp(-1.5 * t(i))) + tau(i);
      b.responses(i) = y(i) <= kOrdinalLow ? 0.0 : (y(i) <= kOrdinalHigh ? 1.0 : 2.0);
    }
    out.data.batches.push_back(std::move(b));
    out.truth.latent_y.push_back(std::move(y));
  }
  return out;
}

SimResult sim_clustered(Index clusters, Index subjects, Index N, double gamma, std::uint64_t seed,
                        std::uint64_t first_stream) {
  SimResult out;
  out.data = empty_dataset(FamilyKind::bernoulli_logit);
  out.truth.theta = KernelParams::se_linear(Vector::Constant(1, kBinomialW), kBinomialV, kBinomialA);
  out.truth.gamma = Vector::Constant(1, gamma);
  const Vector t = open_grid(-4.0, 4.0, N);
  const Matrix C = gram_matrix(t, out.truth.theta);
  for (Index c = 0; c < clusters; ++c) {
    const std::uint64_t k = first_stream + static_cast<std::uint64_t>(c);
    Rng rng = Rng::stream(seed, k);
    const double v = std::sqrt(gamma) * rng.normal();
    for (Index s = 0; s < subjects; ++s) {
      const Vector tau = draw_gp(C, rng);
      FunctionalBatch b = make_batch(batch_name(k) + "s" + std::to_string(s), t);
      b.cluster_id = "c" + batch_name(k).substr(1);
      b.re_covariates = Matrix::Ones(N, 1);
      Vector y(N);
      for (Index i = 0; i < N; ++i) {
        const double sn = std::sin(0.5 * t(i));
        y(i) = 0.8 * sn * sn * sn + v + tau(i);
        b.responses(i) = rng.uniform() < logistic(y(i)) ? 1.0 : 0.0;
      }
      out.data.batches.push_back(std::move(b));
      out.truth.latent_y.push_back(std::move(y));
    }
  }
  return out;
}

SimResult simulate(const SimConfig& config) {
  config.check();
  switch (config.scenario) {
    case Scenario::binomial_se: return sim_binomial_se(config.M, config.N, config.seed, config.first_stream);
    case Scenario::chebyshev: return sim_chebyshev(config.M, config.N, config.seed, config.first_stream);
    case Scenario::ordinal: return sim_ordinal(config.M, config.N, config.seed, config.first_stream);
    case Scenario::clustered:
      return sim_clustered(config.M, config.subjects_per_cluster, config.N, config.gamma, config.seed,
                           config.first_stream);
  }
  return {};
}

double rmse(const Vector& pred, const Vector& truth) {
  if (pred.size() != truth.size() || pred.size() == 0)
    fail(ErrorClass::dimension, "rmse needs aligned non-empty vectors");
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

double pearson(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() < 2) fail(ErrorClass::dimension, "correlation needs aligned vectors of length >= 2");
  const Vector da = (a.array() - a.mean()).matrix(), db = (b.array() - b.mean()).matrix();
  const double na = da.norm(), nb = db.norm();
  if (!(na > 0) || !(nb > 0)) fail(ErrorClass::invalid_argument, "correlation undefined for a constant vector");
  return da.dot(db) / (na * nb);
}

double error_rate(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    fail(ErrorClass::dimension, "error rate needs aligned non-empty vectors");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != truth[i];
  return static_cast<double>(wrong) / static_cast<double>(pred.size());
}

std::string format_truth_csv(const SimResult& sim) {
  std::ostringstream os;
  os << "batch_id,t,y\n";
  for (std::size_t m = 0; m < sim.data.batches.size(); ++m) {
    const auto& b = sim.data.batches[m];
    for (Index i = 0; i < b.size(); ++i)
      os << b.batch_id << ',' << format_real(b.times(i)) << ',' << format_real(sim.truth.latent_y[m](i)) << '\n';
  }
  return os.str();
}

std::string format_truth_params(const SimResult& sim) {
  std::ostringstream os;
  if (sim.truth.theta.size() > 0) {
    os << "kernel.kind=" << to_string(sim.truth.theta.kind) << '\n';
    os << "kernel.values=";
    const Vector v = sim.truth.theta.values();
    for (Index k = 0; k < v.size(); ++k) os << (k ? " " : "") << format_real(v(k));
    os << '\n';
  }
  if (sim.truth.thresholds.size() > 0) {
    os << "thresholds=";
    for (Index k = 0; k < sim.truth.thresholds.size(); ++k) os << (k ? " " : "") << format_real(sim.truth.thresholds(k));
    os << '\n';
  }
  if (sim.truth.gamma.size() > 0) {
    os << "gamma=";
    for (Index k = 0; k < sim.truth.gamma.size(); ++k) os << (k ? " " : "") << format_real(sim.truth.gamma(k));
    os << '\n';
  }
  return os.str();
}

}  // namespace ggpfr
