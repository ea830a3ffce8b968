#include <boost/math/tools/roots.hpp>

#include "doctest.h"
#include "ggpfr/errors.hpp"
#include "ggpfr/kernels.hpp"
#include "ggpfr/latent.hpp"
#include "oracles.hpp"

using namespace ggpfr;

namespace {

struct Instance {
  Vector z, mu;
  Matrix C;
};

Instance random_bernoulli(Index n, Rng& rng, double scale = 1.0) {
  Instance in;
  in.C = oracle::random_spd(n, rng, scale);
  in.mu = oracle::random_vector(n, rng, 0.7);
  in.z.resize(n);
  for (Index i = 0; i < n; ++i) in.z(i) = static_cast<double>(rng.below(2));
  return in;
}

// Prior covariance at the scale of the simulation study: SE_LINEAR with
// (w, v, a) = (1, 0.04, 0.1) on points in (-4, 4).
Matrix paper_scale_cov(Index n, Rng& rng) {
  Matrix X(n, 1);
  for (Index i = 0; i < n; ++i) X(i, 0) = oracle::uniform(rng, -1.5, 1.5);
  return gram_matrix(X, KernelParams::se_linear(Vector::Ones(1), 0.04, 0.1), 1e-6);
}

double psi(const Instance& in, const ObservationFamily& f, const Vector& tau) {
  double s = -0.5 * tau.dot(in.C.llt().solve(tau));
  for (Index i = 0; i < tau.size(); ++i) s += log_density(f, in.z(i), in.mu(i) + tau(i));
  return s;
}

// Plain gradient ascent with backtracking.
Vector ascent_mode(const Instance& in, const ObservationFamily& f) {
  const Matrix Cinv = in.C.inverse();
  Vector tau = Vector::Zero(in.z.size());
  double step = 0.1;
  for (int it = 0; it < 200000; ++it) {
    Vector g = -Cinv * tau;
    for (Index i = 0; i < tau.size(); ++i) g(i) += dlog_density(f, in.z(i), in.mu(i) + tau(i));
    if (g.cwiseAbs().maxCoeff() < 1e-11) break;
    const double cur = psi(in, f, tau);
    while (psi(in, f, tau + step * g) < cur) step *= 0.5;
    tau += step * g;
    step *= 1.5;
  }
  return tau;
}

}  // namespace

TEST_CASE("Gaussian likelihood: mode is the ridge solution and both marginals are exact") {
  Rng rng(1);
  for (int rep = 0; rep < 30; ++rep) {
    const Index n = 1 + static_cast<Index>(rng.below(8));
    const double s2 = rep % 2 ? 1.0 : oracle::uniform(rng, 0.1, 2.0);
    const auto fam = ObservationFamily::gaussian(s2);
    Instance in;
    in.C = oracle::random_spd(n, rng);
    in.mu = oracle::random_vector(n, rng);
    in.z = oracle::random_vector(n, rng, 2.0);
    const Matrix P = in.C.inverse() + Matrix::Identity(n, n) / s2;
    const Vector ridge = P.llt().solve((in.z - in.mu) / s2);
    CHECK((find_mode_newton(in.z, in.mu, in.C, fam) - ridge).cwiseAbs().maxCoeff() < 1e-9);
    const auto post = gaussian_approx_fisher(in.z, in.mu, in.C, fam);
    CHECK((post.mode - ridge).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(post.iterations <= 2);
    Matrix S = in.C;
    S.diagonal().array() += s2;
    const double exact = oracle::log_gaussian(in.z, in.mu, S);
    CHECK(oracle::rel_err(laplace_log_marginal(in.z, in.mu, in.C, fam), exact) < 1e-10);
    CHECK(oracle::rel_err(nested_log_marginal(in.z, in.mu, in.C, fam), exact) < 1e-10);
  }
}

TEST_CASE("one Bernoulli site: mode matches a bisection root") {
  const auto fam = ObservationFamily::bernoulli();
  const Vector z = Vector::Ones(1), mu = Vector::Zero(1);
  const Matrix C = Matrix::Identity(1, 1);
  auto g = [](double t) { return (1.0 - 1.0 / (1.0 + std::exp(-t))) - t; };
  boost::math::tools::eps_tolerance<double> tol(50);
  const auto root = boost::math::tools::bisect(g, 0.0, 1.0, tol);
  const double want = 0.5 * (root.first + root.second);
  CHECK(find_mode_newton(z, mu, C, fam)(0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("Newton and Fisher modes agree with a gradient-ascent oracle") {
  Rng rng(2);
  const std::vector<ObservationFamily> fams = {ObservationFamily::bernoulli(), ObservationFamily::binomial(4),
                                               ObservationFamily::poisson(),
                                               ObservationFamily::ordinal((Vector(2) << -0.3, 0.6).finished())};
  for (int rep = 0; rep < 40; ++rep) {
    const auto& f = fams[static_cast<std::size_t>(rep) % fams.size()];
    const Index n = 1 + static_cast<Index>(rng.below(5));
    Instance in = random_bernoulli(n, rng);
    for (Index i = 0; i < n; ++i) {
      if (f.kind == FamilyKind::binomial_logit) in.z(i) = static_cast<double>(rng.below(5));
      if (f.kind == FamilyKind::poisson_log) in.z(i) = static_cast<double>(rng.below(4));
      if (f.is_ordinal()) in.z(i) = static_cast<double>(rng.below(3));
    }
    const Vector oracle_mode = ascent_mode(in, f);
    const Vector newton = find_mode_newton(in.z, in.mu, in.C, f);
    const auto fisher = gaussian_approx_fisher(in.z, in.mu, in.C, f);
    CHECK((newton - oracle_mode).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((fisher.mode - newton).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(psi(in, f, newton) >= psi(in, f, Vector::Zero(n)));
    CHECK(oracle::rel_err(laplace_log_marginal(in.z, in.mu, in.C, f), nested_log_marginal(in.z, in.mu, in.C, f)) < 1e-8);
  }
}

TEST_CASE("flat likelihood leaves the prior untouched") {
  Rng rng(3);
  const Matrix C = oracle::random_spd(4, rng);
  const SiteLikelihood flat = [](Index, double) { return LogDensityDerivs{0.0, 0.0, 0.0}; };
  const auto post = nested_posterior(flat, Vector::Zero(4), C);
  CHECK(post.mode.cwiseAbs().maxCoeff() == 0.0);
  for (Index i = 0; i < 4; ++i) {
    const auto m = predictive_latent(post, C.col(i), C(i, i));
    CHECK(m.var == doctest::Approx(C(i, i)).epsilon(1e-8));
  }
}

TEST_CASE("Bernoulli marginals against quadrature") {
  Rng rng(4);
  const auto fam = ObservationFamily::bernoulli();
  for (int rep = 0; rep < 20; ++rep) {
    Instance in;
    in.C = paper_scale_cov(1, rng);
    in.mu = oracle::random_vector(1, rng, 0.8);
    in.z = Vector::Constant(1, static_cast<double>(rng.below(2)));
    const double exact = oracle::log_marginal(in.z, in.mu, in.C, fam);
    CHECK(std::abs(laplace_log_marginal(in.z, in.mu, in.C, fam) - exact) < 1e-3);
    CHECK(std::abs(nested_log_marginal(in.z, in.mu, in.C, fam) - exact) < 1e-3);
  }
  for (int rep = 0; rep < 10; ++rep) {
    Instance in;
    in.C = paper_scale_cov(2, rng);
    in.mu = oracle::random_vector(2, rng, 0.8);
    in.z = (Vector(2) << static_cast<double>(rng.below(2)), static_cast<double>(rng.below(2))).finished();
    const double exact = oracle::log_marginal(in.z, in.mu, in.C, fam);
    CHECK(std::abs(laplace_log_marginal(in.z, in.mu, in.C, fam) - exact) < 1e-3);
    CHECK(std::abs(nested_log_marginal(in.z, in.mu, in.C, fam) - exact) < 1e-3);
  }
}

TEST_CASE("log marginal is invariant to reordering observations") {
  Rng rng(5);
  const auto fam = ObservationFamily::bernoulli();
  const Instance in = random_bernoulli(6, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> P(6);
  P.indices() << 3, 0, 5, 1, 4, 2;
  const Vector z2 = P * in.z, mu2 = P * in.mu;
  const Matrix C2 = P * in.C * P.transpose();
  CHECK(nested_log_marginal(z2, mu2, C2, fam) == doctest::Approx(nested_log_marginal(in.z, in.mu, in.C, fam)).epsilon(1e-12));
}

TEST_CASE("shifting mu against the mode leaves site probabilities unchanged") {
  Rng rng(6);
  const auto fam = ObservationFamily::bernoulli();
  const Instance in = random_bernoulli(5, rng);
  const Vector mode = find_mode_newton(in.z, in.mu, in.C, fam);
  const double c = 0.37;
  for (Index i = 0; i < 5; ++i)
    CHECK(std::abs(mean_response(fam, (in.mu(i) + c) + (mode(i) - c)) - mean_response(fam, in.mu(i) + mode(i))) < 1e-10);
}

TEST_CASE("non-convergence raises with the last gradient norm") {
  Rng rng(7);
  const Instance in = random_bernoulli(5, rng, 50.0);
  LatentOptions opts;
  opts.max_iterations = 1;
  try {
    find_mode_newton(in.z, in.mu, in.C, ObservationFamily::bernoulli(), opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.error_class() == ErrorClass::convergence);
    CHECK(e.last_gradient_norm() > 0);
  }
}

TEST_CASE("regret term") {
  CHECK(regret_term(Matrix::Identity(3, 3), 1.0) == doctest::Approx(1.5 * std::log(2.0)));
  Rng rng(8);
  const Matrix C = oracle::random_spd(4, rng);
  CHECK(regret_term(C, 0.0) == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(C);
  for (double delta : {0.3, 1.0, 4.0}) {
    const double want = 0.5 * (1.0 + delta * es.eigenvalues().array()).log().sum();
    CHECK(regret_term(C, delta) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("log_joint and posterior bookkeeping") {
  Rng rng(9);
  const auto fam = ObservationFamily::bernoulli();
  const Instance in = random_bernoulli(4, rng);
  const auto post = gaussian_approx_fisher(in.z, in.mu, in.C, fam);
  // Nested marginal = log p(mode, Z) - log N(mode; mode, (C^-1 + D)^-1).
  Matrix prec = in.C.inverse();
  prec.diagonal() += post.neg_hessian_diag;
  const double log_det_prec = std::log(prec.determinant());
  const double want = log_joint(in.z, in.mu, in.C, fam, post.mode) + 0.5 * 4 * std::log(2 * oracle::kPi) -
                      0.5 * log_det_prec;
  CHECK(post.log_marginal_contribution == doctest::Approx(want).epsilon(1e-10));
  CHECK(post.log_det_precision_ratio() == doctest::Approx(log_det_prec + std::log(in.C.determinant())).epsilon(1e-10));
  auto copy = post;
  copy.chol_precision = Eigen::LLT<Matrix>();
  refactor_posterior(copy);
  CHECK((Matrix(copy.chol_precision.matrixL()) - Matrix(post.chol_precision.matrixL())).cwiseAbs().maxCoeff() < 1e-14);
}
