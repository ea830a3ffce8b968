#include "doctest.h"
#include "ggpfr/data.hpp"
#include "ggpfr/errors.hpp"
#include "ggpfr/simulate.hpp"

using namespace ggpfr;

namespace {

CsvSchema bernoulli_schema() {
  CsvSchema s;
  s.family = ObservationFamily::bernoulli();
  return s;
}

ErrorClass error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.error_class();
  }
  FAIL("expected an error");
  return ErrorClass::io;
}

}  // namespace

TEST_CASE("two-row file parses into one batch") {
  const auto d = parse_csv("batch_id,t,z,x1,u1\nb1,0.0,1,0.5,1.7\nb1,1.0,0,-0.2,1.7\n", bernoulli_schema());
  REQUIRE(d.batches.size() == 1);
  const auto& b = d.batches[0];
  CHECK(b.batch_id == "b1");
  CHECK(b.size() == 2);
  CHECK(b.scalar_covariates.size() == 1);
  CHECK(b.scalar_covariates(0) == 1.7);
  CHECK(b.covariates(1, 0) == -0.2);
  CHECK(d.num_covariates() == 1);
}

TEST_CASE("CSV errors are classified") {
  CHECK(error_of([] { parse_csv("batch_id,t,z,x1,u1\nb1,0.0,1,0.5,1.7\nb1,1.0,0,-0.2,1.8\n", bernoulli_schema()); }) ==
        ErrorClass::consistency);
  CHECK(error_of([] { parse_csv("batch_id,t,z,x1,u1\nb1,0.0,2,0.5,1.7\n", bernoulli_schema()); }) ==
        ErrorClass::validation);
  CHECK(error_of([] { parse_csv("batch_id,z,x1,u1\nb1,1,0.5,1.7\n", bernoulli_schema()); }) == ErrorClass::schema);
  CHECK(error_of([] { parse_csv("batch_id,t,z,x1,u1\nb1,nan,1,0.5,1.7\n", bernoulli_schema()); }) == ErrorClass::parse);
  CHECK(error_of([] { parse_csv("batch_id,t,z,x1,u1\nb1,0,1,inf,1.7\n", bernoulli_schema()); }) == ErrorClass::parse);
  CHECK(error_of([] { parse_csv("batch_id,t,z,x1,u1\nb1,0,1,0.5\n", bernoulli_schema()); }) == ErrorClass::parse);
  CHECK(error_of([] { parse_csv("batch_id,t,z,x1,u1\nb1,0,1,0.5,1\nb1,0,0,0.5,1\n", bernoulli_schema()); }) ==
        ErrorClass::validation);
  CHECK(error_of([] { load_csv("/nonexistent/file.csv", bernoulli_schema()); }) == ErrorClass::io);
}

TEST_CASE("row order does not matter") {
  const std::string head = "batch_id,t,z,x1,u1\n";
  const std::string r1 = "a,0.5,1,0.1,2\n", r2 = "b,0.1,0,0.2,3\n", r3 = "a,0.2,0,0.3,2\n", r4 = "b,0.9,1,0.4,3\n";
  const auto d1 = parse_csv(head + r1 + r2 + r3 + r4, bernoulli_schema());
  const auto d2 = parse_csv(head + r4 + r3 + r2 + r1, bernoulli_schema());
  CHECK(format_csv(d1) == format_csv(d2));
  CHECK(d1.batches[0].times(0) == 0.2);
}

TEST_CASE("CSV round trip reproduces values") {
  const auto sim = sim_binomial_se(4, 9, 5);
  const auto back = parse_csv(format_csv(sim.data), bernoulli_schema());
  REQUIRE(back.batches.size() == sim.data.batches.size());
  for (std::size_t m = 0; m < back.batches.size(); ++m) {
    const auto& a = sim.data.batches[m];
    const auto& b = back.batches[m];
    CHECK(a.batch_id == b.batch_id);
    CHECK((a.times - b.times).cwiseAbs().maxCoeff() <= 1e-12 * a.times.cwiseAbs().maxCoeff());
    CHECK((a.covariates - b.covariates).cwiseAbs().maxCoeff() <= 1e-12 * a.covariates.cwiseAbs().maxCoeff());
    CHECK(a.responses == b.responses);
  }
}

TEST_CASE("missing responses only where allowed") {
  auto s = bernoulli_schema();
  const std::string text = "batch_id,t,z,x1,u1\nb1,0.0,NA,0.5,1.7\nb1,1.0,0,-0.2,1.7\n";
  CHECK_THROWS_AS(parse_csv(text, s), Error);
  s.allow_missing_response = true;
  const auto d = parse_csv(text, s);
  CHECK(std::isnan(d.batches[0].responses(0)));
}

TEST_CASE("clustered columns") {
  CsvSchema s = bernoulli_schema();
  s.require_cluster = true;
  const auto d = parse_csv("batch_id,cluster_id,t,z,x1,u1,w1\ns1,c1,0,1,0,1,1\ns2,c1,0,0,0,1,1\n", s);
  CHECK(d.batches.size() == 2);
  CHECK(d.batches[1].cluster_id == "c1");
  CHECK(d.num_re_covariates() == 1);
  CHECK_THROWS_AS(parse_csv("batch_id,cluster_id,t,z,x1,u1,w1\ns1,c1,0,1,0,1,1\ns1,c2,1,0,0,1,1\n", s), Error);
}

TEST_CASE("select keeps the chosen rows") {
  const auto sim = sim_binomial_se(1, 6, 2);
  const auto sub = sim.data.batches[0].select({1, 4});
  CHECK(sub.size() == 2);
  CHECK(sub.times(1) == sim.data.batches[0].times(4));
  CHECK(sub.scalar_covariates == sim.data.batches[0].scalar_covariates);
}
