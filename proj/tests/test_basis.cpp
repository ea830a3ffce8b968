#include <algorithm>

#include "doctest.h"
#include "ggpfr/basis.hpp"
#include "ggpfr/errors.hpp"
#include "oracles.hpp"

using namespace ggpfr;

namespace {

// Textbook Cox-de Boor recursion with 0/0 = 0.
double cox_de_boor(const Vector& knots, Index i, int k, double t) {
  if (k == 0) return (knots(i) <= t && t < knots(i + 1)) ? 1.0 : 0.0;
  double out = 0.0;
  const double d1 = knots(i + k) - knots(i), d2 = knots(i + k + 1) - knots(i + 1);
  if (d1 > 0) out += (t - knots(i)) / d1 * cox_de_boor(knots, i, k - 1, t);
  if (d2 > 0) out += (knots(i + k + 1) - t) / d2 * cox_de_boor(knots, i + 1, k - 1, t);
  return out;
}

}  // namespace

TEST_CASE("knot placement") {
  const auto b4 = place_knots((Vector(2) << 0.0, 1.0).finished(), 4, KnotMethod::equal_spaced);
  CHECK(b4.size() == 4);
  CHECK(b4.knots.size() == 8);
  CHECK(b4.knots.head(4).isZero());
  CHECK((b4.knots.tail(4).array() == 1.0).all());

  const Vector t = Vector::LinSpaced(50, -4, 4);
  const auto b10 = place_knots(t, 10, KnotMethod::equal_spaced);
  const Vector in = b10.interior_knots();
  REQUIRE(in.size() == 6);
  for (Index k = 1; k <= 6; ++k) CHECK(in(k - 1) == doctest::Approx(-4 + 8.0 * k / 7).epsilon(1e-14));

  Rng rng(8);
  Vector skew(101);
  for (Index i = 0; i < skew.size(); ++i) skew(i) = std::exp(2 * rng.uniform());
  const auto bq = place_knots(skew, 10, KnotMethod::quantile);
  std::vector<double> sorted(skew.data(), skew.data() + skew.size());
  std::sort(sorted.begin(), sorted.end());
  for (Index k = 1; k <= 6; ++k) {
    // Type-7 sample quantile.
    const double h = (sorted.size() - 1) * (k / 7.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double want = sorted[lo] + (h - lo) * (sorted[std::min(lo + 1, sorted.size() - 1)] - sorted[lo]);
    CHECK(bq.interior_knots()(k - 1) == doctest::Approx(want).epsilon(1e-13));
  }
  CHECK_THROWS_AS(place_knots(t, 3, KnotMethod::equal_spaced), Error);
  CHECK_THROWS_AS(place_knots(Vector::Constant(5, 2.0), 6, KnotMethod::equal_spaced), Error);
}

TEST_CASE("basis rows: boundary, partition of unity, support") {
  const auto b = place_knots(Vector::LinSpaced(30, -4, 4), 9, KnotMethod::equal_spaced);
  const Vector first = basis_row(b, -4.0);
  CHECK(first(0) == doctest::Approx(1.0));
  CHECK(first.tail(8).cwiseAbs().maxCoeff() < 1e-15);
  const Vector last = basis_row(b, 4.0);
  CHECK(last(8) == doctest::Approx(1.0));
  Rng rng(1);
  for (int k = 0; k < 2000; ++k) {
    const double t = oracle::uniform(rng, -4, 4);
    const Vector r = basis_row(b, t);
    CHECK(std::abs(r.sum() - 1.0) < 1e-12);
    CHECK((r.array() >= 0).all());
    CHECK((r.array() > 0).count() <= 4);
    for (Index d = 0; d < b.size(); ++d)
      if (t < b.knots(d) || t > b.knots(d + 4)) CHECK(r(d) == 0.0);
  }
}

TEST_CASE("de Boor evaluation agrees with the Cox-de Boor recursion") {
  Rng rng(6);
  for (auto method : {KnotMethod::equal_spaced, KnotMethod::quantile}) {
    Vector t(40);
    for (Index i = 0; i < 40; ++i) t(i) = oracle::uniform(rng, 0, 5);
    const auto b = place_knots(t, 8, method);
    for (int k = 0; k < 300; ++k) {
      const double s = oracle::uniform(rng, b.lower(), b.upper() - 1e-9);
      const Vector r = basis_row(b, s);
      for (Index d = 0; d < b.size(); ++d) CHECK(std::abs(r(d) - cox_de_boor(b.knots, d, 3, s)) < 1e-12);
    }
  }
}

TEST_CASE("design matrix stacks rows and clamps outside the domain") {
  const auto b = place_knots(Vector::LinSpaced(10, 0, 1), 6, KnotMethod::equal_spaced);
  const Vector times = (Vector(4) << -0.5, 0.2, 0.7, 1.5).finished();
  const Matrix P = design_matrix(b, times);
  CHECK(P.rows() == 4);
  CHECK(P.cols() == 6);
  for (Index i = 0; i < 4; ++i) CHECK((P.row(i).transpose() - basis_row(b, times(i))).cwiseAbs().maxCoeff() == 0.0);
  CHECK((P.row(0).transpose() - basis_row(b, 0.0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((P.row(3).transpose() - basis_row(b, 1.0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant coefficients reproduce a constant mean") {
  const auto b = place_knots(Vector::LinSpaced(10, -4, 4), 7, KnotMethod::equal_spaced);
  const Vector coef = Vector::Constant(7, 2.5);
  for (double t = -4; t <= 4; t += 0.37) CHECK(basis_row(b, t).dot(coef) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("make_basis with explicit knots") {
  const auto b = make_basis((Vector(2) << 0.3, 0.6).finished(), 0.0, 1.0);
  CHECK(b.size() == 6);
  CHECK(b.interior_knots()(1) == 0.6);
}
