#include "doctest.h"
#include "ggpfr/errors.hpp"
#include "ggpfr/kernels.hpp"
#include "oracles.hpp"

using namespace ggpfr;

namespace {

KernelParams paper_theta() { return KernelParams::se_linear(Vector::Ones(1), 0.04, 0.1); }

KernelParams random_params(KernelKind kind, Index q, Rng& rng) {
  KernelParams p;
  p.kind = kind;
  p.input_dim = q;
  p.log_params.resize(kernel_param_count(kind, q));
  for (Index k = 0; k < p.size(); ++k) p.log_params(k) = oracle::uniform(rng, -1.0, 1.0);
  return p;
}

Matrix random_inputs(Index n, Index q, Rng& rng) {
  Matrix X(n, q);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < q; ++k) X(i, k) = oracle::uniform(rng, -2, 2);
  return X;
}

const KernelKind kAll[] = {KernelKind::se_linear, KernelKind::matern32, KernelKind::rational_quadratic,
                           KernelKind::piecewise_poly_q2};

}  // namespace

TEST_CASE("SE_LINEAR hand values") {
  const auto th = paper_theta();
  const Vector zero = Vector::Zero(1), one = Vector::Ones(1);
  CHECK(kernel_eval(zero, zero, th) == doctest::Approx(0.04).epsilon(1e-14));
  CHECK(kernel_eval(one, one, th) == doctest::Approx(0.14).epsilon(1e-14));
  CHECK(kernel_eval(zero, one, th) == doctest::Approx(0.04 * std::exp(-0.5)).epsilon(1e-14));
  CHECK_THROWS_AS(kernel_eval(Vector::Zero(2), zero, th), Error);
}

TEST_CASE("stationary kernels follow their textbook forms") {
  const Vector a = (Vector(2) << 0.3, -0.1).finished(), b = (Vector(2) << -0.4, 0.5).finished();
  const double r = (a - b).norm();
  const double l = 0.8, s2 = 1.7, alpha = 2.5;
  const double s = std::sqrt(3.0) * r / l;
  CHECK(kernel_eval(a, b, KernelParams::matern32(2, l, s2)) == doctest::Approx(s2 * (1 + s) * std::exp(-s)));
  CHECK(kernel_eval(a, b, KernelParams::rational_quadratic(2, l, s2, alpha)) ==
        doctest::Approx(s2 * std::pow(1 + r * r / (2 * alpha * l * l), -alpha)));
  // PP q=2 with j = floor(D/2) + 3.
  const double j = 4, u = r / 1.5;
  const double pp = std::pow(1 - u, j + 2) * ((j * j + 4 * j + 3) * u * u + (3 * j + 6) * u + 3) / 3;
  CHECK(kernel_eval(a, b, KernelParams::piecewise_poly_q2(2, 1.5, s2)) == doctest::Approx(s2 * pp));
  CHECK(kernel_eval(a, b, KernelParams::piecewise_poly_q2(2, 0.5 * r, s2)) == 0.0);
}

TEST_CASE("gram matrix entries, symmetry and jitter") {
  Rng rng(5);
  for (auto kind : kAll) {
    const auto th = random_params(kind, 2, rng);
    const Matrix X = random_inputs(5, 2, rng);
    const Matrix C = gram_matrix(X, th);
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j) {
        CHECK(std::abs(C(i, j) - kernel_eval(X.row(i).transpose(), X.row(j).transpose(), th)) < 1e-14);
        CHECK(C(i, j) == C(j, i));
      }
  }
  Matrix one(1, 1);
  one << 0.3;
  const auto th = paper_theta();
  CHECK(gram_matrix(one, th, 1e-6)(0, 0) == doctest::Approx(kernel_eval(one.row(0).transpose(), one.row(0).transpose(), th) + 1e-6));
  Matrix dup(2, 1);
  dup << 0.5, 0.5;
  const Matrix C0 = gram_matrix(dup, th, 0.0);
  CHECK(std::abs(C0.determinant()) < 1e-15);
  Eigen::LLT<Matrix> llt(gram_matrix(dup, th, 1e-6));
  CHECK(llt.info() == Eigen::Success);
  const auto f = factorize_with_jitter(C0, 1e-6);
  CHECK(f.llt.info() == Eigen::Success);
  CHECK(f.jitter >= 1e-6);
}

TEST_CASE("jitter escalation gives up with a conditioning error") {
  Matrix bad(2, 2);
  bad << 1.0, 0.0, 0.0, -1.0;
  try {
    factorize_with_jitter(bad, 1e-6);
    FAIL("expected conditioning error");
  } catch (const Error& e) {
    CHECK(e.error_class() == ErrorClass::conditioning);
  }
}

TEST_CASE("random Gram matrices are positive definite with jitter") {
  Rng rng(9);
  for (int rep = 0; rep < 40; ++rep)
    for (auto kind : kAll) {
      const Index n = 1 + static_cast<Index>(rng.below(20));
      const auto th = random_params(kind, 1 + static_cast<Index>(rng.below(3)), rng);
      const Matrix X = random_inputs(n, th.input_dim, rng);
      const Matrix C = gram_matrix(X, th, 1e-6);
      CHECK((C - C.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
      CHECK(Eigen::LLT<Matrix>(C).info() == Eigen::Success);
    }
}

TEST_CASE("gradient identities") {
  Rng rng(2);
  const auto th = paper_theta();
  const Matrix X = random_inputs(6, 1, rng);
  const auto g = gram_grad(X, th);
  REQUIRE(g.size() == 3);
  // d/dlog v of the SE part is the SE part itself.
  Matrix se(6, 6);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j) se(i, j) = 0.04 * std::exp(-0.5 * std::pow(X(i, 0) - X(j, 0), 2));
  CHECK((g[1] - se).cwiseAbs().maxCoeff() < 1e-15);
  const auto g0 = gram_grad(Matrix::Zero(4, 1), th);
  CHECK(g0[2].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gram_grad matches central differences for every kind") {
  Rng rng(21);
  for (int rep = 0; rep < 25; ++rep)
    for (auto kind : kAll) {
      const auto th = random_params(kind, 2, rng);
      const Matrix X = random_inputs(6, 2, rng);
      const auto g = gram_grad(X, th);
      REQUIRE(static_cast<Index>(g.size()) == th.size());
      for (Index k = 0; k < th.size(); ++k) {
        auto plus = th, minus = th;
        const double h = 1e-6;
        plus.log_params(k) += h;
        minus.log_params(k) -= h;
        const Matrix fd = (gram_matrix(X, plus) - gram_matrix(X, minus)) / (2 * h);
        const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
        CHECK((g[static_cast<std::size_t>(k)] - fd).cwiseAbs().maxCoeff() / scale < 1e-5);
        CHECK((g[static_cast<std::size_t>(k)] - g[static_cast<std::size_t>(k)].transpose()).cwiseAbs().maxCoeff() == 0.0);
      }
    }
}

TEST_CASE("cross covariance") {
  Rng rng(4);
  const auto th = random_params(KernelKind::se_linear, 2, rng);
  const Matrix X = random_inputs(5, 2, rng);
  const Matrix C = gram_matrix(X, th);
  const Vector c = cross_cov(X, X.row(2).transpose(), th);
  CHECK((c - C.col(2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(cross_cov(Matrix(0, 2), Vector::Zero(2), th).size() == 0);
  const Vector xs = (Vector(2) << 0.7, -1.1).finished();
  const Vector c2 = cross_cov(X, xs, th);
  for (Index i = 0; i < 5; ++i) CHECK(c2(i) == kernel_eval(X.row(i).transpose(), xs, th));
  CHECK_THROWS_AS(cross_cov(X, Vector::Zero(3), th), Error);
}

TEST_CASE("parameter validation") {
  KernelParams p = paper_theta();
  p.log_params(0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(p.check(), Error);
  CHECK(kernel_param_count(KernelKind::se_linear, 3) == 5);
  CHECK(kernel_param_count(KernelKind::rational_quadratic, 3) == 3);
  CHECK(kernel_kind_from_string("MATERN32") == KernelKind::matern32);
}
