#include "doctest.h"
#include "ggpfr/errors.hpp"
#include "ggpfr/predict.hpp"
#include "ggpfr/simulate.hpp"
#include "ggpfr/special.hpp"
#include "oracles.hpp"

using namespace ggpfr;

namespace {

// Model assembled by hand so the tests do not depend on the optimizer.
FittedModel hand_model(const Dataset& data, const ObservationFamily& fam, const KernelParams& theta,
                       std::uint64_t seed) {
  FittedModel m;
  m.family = fam;
  m.theta = theta;
  m.basis = basis_for(data, 5, KnotMethod::equal_spaced);
  Rng rng(seed);
  m.B = oracle::random_vector(5, rng, 0.5);
  m.groups = independent_groups(data);
  for (const auto& g : m.groups) m.per_batch.push_back(group_posterior(m, g));
  return m;
}

Dataset small_data(const ObservationFamily& fam, Index M, Index N, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.family_tag = fam.kind;
  for (Index m = 0; m < M; ++m) {
    FunctionalBatch b;
    b.batch_id = "b" + std::to_string(m);
    b.times = open_grid(-2, 2, N);
    b.covariates = b.times;
    b.scalar_covariates = Vector::Ones(1);
    b.responses.resize(N);
    for (Index i = 0; i < N; ++i) {
      switch (fam.kind) {
        case FamilyKind::gaussian_identity:
          b.responses(i) = rng.normal();
          break;
        case FamilyKind::ordinal_probit:
          b.responses(i) = static_cast<double>(rng.below(3));
          break;
        default:
          b.responses(i) = static_cast<double>(rng.below(2));
      }
    }
    d.batches.push_back(b);
  }
  return d;
}

const KernelParams kTheta = KernelParams::se_linear(Vector::Ones(1), 0.3, 0.1);

}  // namespace

TEST_CASE("Gaussian predictive distribution is the GP posterior") {
  const auto fam = ObservationFamily::gaussian(0.25);
  const Dataset d = small_data(fam, 2, 9, 1);
  const FittedModel m = hand_model(d, fam, kTheta, 2);
  const auto& b = d.batches[0];
  Matrix S = gram_matrix(b.covariates, kTheta);
  S.diagonal().array() += m.jitter + 0.25;
  const Vector r = b.responses - design_matrix(m.basis, b.times) * m.B;
  const BatchPredictor pred(m, b);
  for (double t : {-1.7, -0.3, 0.0, 0.9, 1.8}) {
    const Vector x = Vector::Constant(1, t);
    const Vector c = cross_cov(b.covariates, x, kTheta);
    const double mean = c.dot(S.llt().solve(r));
    const double var = kernel_eval(x, x, kTheta) - c.dot(S.llt().solve(c));
    const auto p = pred.predict(t, x, Vector::Ones(1));
    CHECK(p.latent_mean == doctest::Approx(mean).epsilon(1e-9));
    CHECK(p.latent_var == doctest::Approx(var).epsilon(1e-8));
    CHECK(p.mean_structure == doctest::Approx(basis_row(m.basis, t).dot(m.B.col(0))).epsilon(1e-14));
    CHECK(p.response_mean == doctest::Approx(p.latent_y()).epsilon(1e-9));
    CHECK(p.response_var == doctest::Approx(var + 0.25).epsilon(1e-8));
  }
  // predict_response is the one-shot form of the same computation.
  const auto one = predict_response(m, b, 0.4, Vector::Constant(1, 0.4), Vector::Ones(1));
  const auto many = pred.predict(0.4, Vector::Constant(1, 0.4), Vector::Ones(1));
  CHECK(one.response_mean == many.response_mean);
  CHECK(latent_posterior_at(m, b, Vector::Constant(1, 0.4)).var == many.latent_var);
}

TEST_CASE("response moments against one-dimensional quadrature") {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const double mu = oracle::uniform(rng, -2, 2), m = oracle::uniform(rng, -1, 1), v = oracle::uniform(rng, 0.01, 1.5);
    const LatentMoments lm{m, v};

    const auto bern = response_moments(ObservationFamily::bernoulli(), mu, lm);
    const double p = oracle::normal_expectation([](double e) { return logistic(e); }, mu + m, v);
    CHECK(std::abs(bern.response_mean - p) < 1e-8);
    CHECK(std::abs(bern.response_var - p * (1 - p)) < 1e-8);

    const auto bin = response_moments(ObservationFamily::binomial(5), mu, lm);
    const double e_p2 = oracle::normal_expectation([](double e) { return logistic(e) * logistic(e); }, mu + m, v);
    CHECK(std::abs(bin.response_mean - 5 * p) < 1e-7);
    CHECK(std::abs(bin.response_var - (5 * (p - e_p2) + 25 * (e_p2 - p * p))) < 1e-7);

    // Lognormal closed form.
    const auto pois = response_moments(ObservationFamily::poisson(), mu, lm);
    const double mean = std::exp(mu + m + 0.5 * v);
    CHECK(pois.response_mean == doctest::Approx(mean).epsilon(1e-9));
    CHECK(pois.response_var == doctest::Approx(mean + (std::exp(v) - 1) * mean * mean).epsilon(1e-8));

    const auto fam = ObservationFamily::ordinal((Vector(2) << -0.4, 0.8).finished());
    const auto ord = response_moments(fam, mu, lm);
    REQUIRE(ord.category_probs.size() == 3);
    CHECK(ord.category_probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (Index j = 0; j < 3; ++j) {
      const double want = oracle::normal_expectation([&](double e) { return category_probs(fam, e)(j); }, mu + m, v);
      CHECK(std::abs(ord.category_probs(j) - want) < 1e-9);
    }
    CHECK(ord.response_mean == doctest::Approx(ord.category_probs(1) + 2 * ord.category_probs(2)).epsilon(1e-12));
  }
}

TEST_CASE("Laplace predictive mean against two-dimensional quadrature") {
  const auto fam = ObservationFamily::bernoulli();
  Dataset d;
  FunctionalBatch b;
  b.batch_id = "one";
  b.times = Vector::Constant(1, 0.3);
  b.covariates = b.times;
  b.scalar_covariates = Vector::Ones(1);
  b.responses = Vector::Ones(1);
  d.batches = {b, b};
  d.batches[1].batch_id = "two";
  d.batches[1].times(0) = 1.0;
  d.batches[1].covariates(0, 0) = 1.0;
  FittedModel m = hand_model(d, fam, KernelParams::se_linear(Vector::Ones(1), 0.04, 0.1), 4);
  m.basis = place_knots((Vector(2) << -2.0, 2.0).finished(), 5, KnotMethod::equal_spaced);
  const double t_star = 0.8;
  const Vector x = Vector::Constant(1, t_star);
  const double mu = basis_row(m.basis, 0.3).dot(m.B.col(0)), mu_star = basis_row(m.basis, t_star).dot(m.B.col(0));
  const double c11 = kernel_eval(b.covariates.row(0), b.covariates.row(0), m.theta) + m.jitter;
  const double c12 = kernel_eval(b.covariates.row(0), x, m.theta);
  const double c22 = kernel_eval(x, x, m.theta) + m.jitter;
  auto lik = [&](double tau) { return logistic(mu + tau); };
  const double pz = oracle::normal_expectation(lik, 0.0, c11);
  const double num = oracle::normal_expectation(
      [&](double tau) {
        return lik(tau) * oracle::normal_expectation([&](double s) { return logistic(mu_star + s); }, c12 / c11 * tau,
                                                     c22 - c12 * c12 / c11);
      },
      0.0, c11);
  const double exact = num / pz;
  const auto lap = predict_response_laplace(m, b, t_star, x, Vector::Ones(1));
  const auto quad = predict_response(m, b, t_star, x, Vector::Ones(1));
  CHECK(std::abs(lap.response_mean - exact) < 2e-3);
  CHECK(std::abs(quad.response_mean - exact) < 2e-3);
  CHECK(lap.response_var >= 0.0);
}

TEST_CASE("mixture moments") {
  PredictiveDistribution a, b;
  a.response_mean = 0.2;
  a.response_var = 0.1;
  a.latent_mean = -1;
  a.latent_var = 0.5;
  b.response_mean = 0.6;
  b.response_var = 0.2;
  b.latent_mean = 1;
  b.latent_var = 0.5;
  const auto mix = mix_predictions({a, b}, (Vector(2) << 0.5, 0.5).finished());
  CHECK(mix.response_mean == doctest::Approx(0.4));
  CHECK(mix.response_var == doctest::Approx(0.15 + 0.04));
  CHECK(mix.latent_mean == doctest::Approx(0.0));
  CHECK(mix.latent_var == doctest::Approx(1.5));
  CHECK_THROWS_AS(mix_predictions({a, b}, (Vector(2) << 0.7, 0.7).finished()), Error);
  CHECK_THROWS_AS(mix_predictions({a, b}, Vector::Ones(1)), Error);
  CHECK_THROWS_AS(mix_predictions({}, Vector()), Error);
}

TEST_CASE("new-batch prediction mixes the fitted batches") {
  const auto fam = ObservationFamily::bernoulli();
  const Dataset d = small_data(fam, 4, 7, 5);
  const FittedModel m = hand_model(d, fam, kTheta, 6);
  const Vector x = Vector::Constant(1, 0.5);
  std::vector<PredictiveDistribution> parts;
  for (const auto& b : d.batches) parts.push_back(predict_response(m, b, 0.5, x, Vector::Ones(1)));
  const auto want = mix_predictions(parts, Vector::Constant(4, 0.25));
  const auto got = predict_new_batch(m, 0.5, x, Vector::Ones(1));
  CHECK(got.response_mean == doctest::Approx(want.response_mean).epsilon(1e-10));
  CHECK(got.response_var == doctest::Approx(want.response_var).epsilon(1e-10));
  const Vector w = (Vector(4) << 1, 0, 0, 0).finished();
  CHECK(predict_new_batch(m, 0.5, x, Vector::Ones(1), w).response_mean ==
        doctest::Approx(parts[0].response_mean).epsilon(1e-10));
}

TEST_CASE("prediction is unaffected by batch order and constant shifts") {
  const auto fam = ObservationFamily::bernoulli();
  const Dataset d = small_data(fam, 1, 8, 7);
  const FittedModel m = hand_model(d, fam, kTheta, 8);
  FunctionalBatch rev = d.batches[0].select({7, 6, 5, 4, 3, 2, 1, 0});
  const Vector x = Vector::Constant(1, -0.2);
  const auto a = predict_response(m, d.batches[0], -0.2, x, Vector::Ones(1));
  const auto b = predict_response(m, rev, -0.2, x, Vector::Ones(1));
  CHECK(a.response_mean == doctest::Approx(b.response_mean).epsilon(1e-10));
  CHECK(a.latent_var == doctest::Approx(b.latent_var).epsilon(1e-10));
}

TEST_CASE("classification rules") {
  PredictiveDistribution p;
  p.response_mean = 0.5;
  CHECK(classify(p, ObservationFamily::bernoulli()) == 0);
  p.response_mean = 0.51;
  CHECK(classify(p, ObservationFamily::bernoulli()) == 1);
  p.response_mean = 2.5;
  CHECK(classify(p, ObservationFamily::binomial(4)) == 2);
  p.response_mean = 2.6;
  CHECK(classify(p, ObservationFamily::poisson()) == 3);
  p.category_probs = (Vector(3) << 0.4, 0.4, 0.2).finished();
  CHECK(classify(p, ObservationFamily::ordinal((Vector(2) << 0, 1).finished())) == 0);
  p.category_probs = (Vector(3) << 0.1, 0.3, 0.6).finished();
  CHECK(classify(p, ObservationFamily::ordinal((Vector(2) << 0, 1).finished())) == 2);
}

TEST_CASE("prediction errors") {
  const auto fam = ObservationFamily::bernoulli();
  const Dataset d = small_data(fam, 2, 5, 9);
  const FittedModel m = hand_model(d, fam, kTheta, 10);
  const FunctionalBatch empty = d.batches[0].select({});
  CHECK_THROWS_AS(predict_response(m, empty, 0.0, Vector::Zero(1), Vector::Ones(1)), Error);
  CHECK_THROWS_AS(predict_response(m, d.batches[0], 0.0, Vector::Zero(2), Vector::Ones(1)), Error);
  CHECK_THROWS_AS(predict_response(m, d.batches[0], 0.0, Vector::Zero(1), Vector::Ones(2)), Error);
  FittedModel c = m;
  c.clustered = true;
  CHECK_THROWS_AS(predict_new_batch(c, 0.0, Vector::Zero(1), Vector::Ones(1)), Error);
}
