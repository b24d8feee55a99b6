#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "relufim/bounds.hpp"
#include "relufim/error.hpp"
#include "relufim/kernel.hpp"
#include "relufim/operator.hpp"

using namespace relufim;

namespace {

constexpr double kPi = std::numbers::pi;

struct Run {
  WeightMatrix w;
  FeatureBasis basis;
  GramReport geometry;
  QuotientTable quotients;
  double trace;

  explicit Run(std::size_t d, std::size_t p, std::uint64_t seed)
      : w(generate_weights(d, p, seed)),
        basis(w),
        geometry(basis_geometry(basis)),
        quotients(rayleigh_quotients(closed_form_operator(w), basis)),
        trace(0.5 * w.entries().squaredNorm()) {}

  CertifyInputs inputs() const { return {w.run(), trace, &quotients, &geometry}; }
};

bool passes_prefix(const CertificateReport& r, std::string_view prefix) {
  for (const auto& c : r.checks)
    if (c.claim.starts_with(prefix) && !c.pass) return false;
  return true;
}

}  // namespace

TEST_CASE("iota values") {
  const auto at1 = iota(1.0);
  CHECK(at1.first == doctest::Approx(oracle::iota1_at_1).epsilon(1e-15));
  CHECK(at1.second == doctest::Approx(oracle::iota2_at_1).epsilon(1e-15));
  const auto far = iota(40.0);
  CHECK(far.first < 1e-300);
  CHECK(far.second < 1e-300);
  CHECK_THROWS_AS(iota(0.0), Error);
  CHECK_THROWS_AS(iota(-1.0), Error);
}

TEST_CASE("xi components at d = 10 and d = 20") {
  const auto x = xi_of_d(10);
  CHECK(x.d1 == 8);
  CHECK(x.d2 == 9);
  CHECK(x.xi1 == doctest::Approx(oracle::xi1_d8).epsilon(1e-14));
  CHECK(x.xi2 == doctest::Approx(oracle::xi2_d9).epsilon(1e-14));
  CHECK(x.xi1_bar == doctest::Approx(oracle::xi1_bar_d8).epsilon(1e-14));
  CHECK(x.xi2_bar == doctest::Approx(oracle::xi2_bar_d9).epsilon(1e-14));
  CHECK(x.xi == doctest::Approx(oracle::xi2_bar_d9).epsilon(1e-14));
  CHECK(xi_of_d(10, 0.25, true).xi == doctest::Approx(oracle::xi1_bar_d9).epsilon(1e-14));

  CHECK(xi1(18, 0.25) == doctest::Approx(oracle::xi1_d18).epsilon(1e-14));
  CHECK(xi1_bar(18, 0.25) == doctest::Approx(oracle::xi1_bar_d18).epsilon(1e-14));
  CHECK(xi2(19, 0.25) == doctest::Approx(oracle::xi2_d19).epsilon(1e-14));
  CHECK(xi2_bar(19, 0.25) == doctest::Approx(oracle::xi2_bar_d19).epsilon(1e-14));
}

TEST_CASE("xi domain") {
  CHECK_THROWS_WITH_AS(xi_of_d(4), doctest::Contains("d > 4 required"), Error);
  CHECK_THROWS_AS(xi_of_d(10, 0.0), Error);
  CHECK_THROWS_AS(xi_of_d(10, 0.5), Error);
  CHECK_NOTHROW(xi_of_d(5));
}

TEST_CASE("xi is positive and eventually decreasing in d") {
  for (std::size_t d = 5; d <= 1000; ++d) CHECK(xi_of_d(d).xi > 0.0);
  // The exponential terms peak near d = 250; past that xi falls monotonically.
  double prev = xi_of_d(254).xi;
  for (std::size_t d = 255; d <= 3000; ++d) {
    const double x = xi_of_d(d).xi;
    CHECK(x < prev);
    prev = x;
  }
  CHECK(xi_of_d(1000000).xi < xi_of_d(10000).xi);
  CHECK(xi_of_d(10000).xi < xi_of_d(1000).xi);
  CHECK(xi_of_d(1000000).xi < 0.05);
  // At d = 100 a larger eta shrinks the exponential terms.
  CHECK(xi_of_d(100, 0.1).xi > xi_of_d(100, 0.25).xi);
  CHECK(xi_of_d(100, 0.25).xi > xi_of_d(100, 0.4).xi);
}

TEST_CASE("pair count matches the vector count") {
  CHECK(pair_count(10) == 2211);
  for (std::uint64_t d = 5; d <= 50; ++d) {
    const std::uint64_t m = d * (d + 3) / 2 + 1;
    CHECK(pair_count(d) == m * (m + 1) / 2);
  }
}

TEST_CASE("probability floor") {
  const auto f = probability_floor(10, 1000000, 0.5, 1.0);
  CHECK(f.value == doctest::Approx(1.0 - 2211.0 / (0.25 * 1e6)).epsilon(1e-15));
  CHECK_FALSE(f.vacuous);
  CHECK(probability_floor(10, 1000000000000ull, 0.5, 1.0).value > 0.99999);
  const auto v = probability_floor(10, 2000, 0.1, 1.0);
  CHECK(v.vacuous);
  CHECK(v.value == 0.0);
  CHECK_THROWS_AS(probability_floor(4, 100, 0.1, 1.0), Error);
  CHECK_THROWS_AS(probability_floor(10, 0, 0.1, 1.0), Error);
  CHECK_THROWS_AS(probability_floor(10, 100, 0.0, 1.0), Error);
  CHECK_THROWS_AS(probability_floor(10, 100, 0.1, 0.0), Error);
}

TEST_CASE("observed delta is the tightest passing tolerance") {
  const Run run(10, 2000, 3);
  const auto xi = xi_of_d(10);
  const double ds = observed_delta(run.geometry, xi);
  REQUIRE(ds > 0.0);
  const auto at = certify_run(run.inputs(), xi, ds);
  CHECK(passes_prefix(at, "norm:"));
  CHECK(passes_prefix(at, "inner:"));
  const auto below = certify_run(run.inputs(), xi, std::nextafter(ds, 0.0) * (1 - 1e-12));
  CHECK_FALSE((passes_prefix(below, "norm:") && passes_prefix(below, "inner:")));
}

TEST_CASE("certificate at the observed delta") {
  const Run run(10, 2000, 4);
  const auto xi = xi_of_d(10);
  const double ds = observed_delta(run.geometry, xi);
  const auto r = certify_run(run.inputs(), xi, ds);
  CHECK(r.all_pass());
  CHECK(r.delta_star == ds);
  CHECK(r.D == 2211);
  // trace, quotients, norms, pairs, and the three closing checks
  const std::size_t m = 66;
  CHECK(r.checks.size() == 1 + m + m + m * (m - 1) / 2 + 3);
  for (const auto& c : r.checks) {
    CHECK(std::isfinite(c.lhs));
    CHECK(std::isfinite(c.rhs));
    CHECK(c.pass == (c.margin() >= 0.0));
  }
}

TEST_CASE("certificate checks loosen monotonically in delta") {
  const Run run(10, 1000, 5);
  const auto xi = xi_of_d(10);
  const double ds = observed_delta(run.geometry, xi);
  const auto base = certify_run(run.inputs(), xi, ds);
  for (double delta : {ds * 1.5, ds + 0.1, 0.9}) {
    const auto r = certify_run(run.inputs(), xi, delta);
    for (std::size_t k = 0; k < r.checks.size(); ++k) {
      if (base.checks[k].pass) CHECK(r.checks[k].pass);
    }
  }
}

TEST_CASE("zero tolerance fails the norm checks") {
  const Run run(10, 1000, 6);
  const auto r = certify_run(run.inputs(), xi_of_d(10), 0.0);
  CHECK_FALSE(r.all_pass());
  CHECK_FALSE(passes_prefix(r, "norm:v0"));
  CHECK(r.floor.vacuous);
}

TEST_CASE("remark constant and quotient floor sum") {
  const Run run(10, 500, 7);
  const auto r = certify_run(run.inputs(), xi_of_d(10), 0.3);
  const auto find = [&](std::string_view id) {
    for (const auto& c : r.checks)
      if (c.claim == id) return c;
    FAIL("missing check");
    return Check{};
  };
  const auto remark = find("remark_constant");
  CHECK(remark.lhs == doctest::Approx((3 + kPi) / (2 * kPi)).epsilon(1e-15));
  CHECK(remark.lhs == doctest::Approx(0.977464829).epsilon(1e-9));
  CHECK(remark.pass);
  CHECK(find("quotient_floor_sum").pass);
}

TEST_CASE("certificate rejects inputs from different runs") {
  const Run a(10, 300, 1), b(10, 300, 2);
  CertifyInputs mixed{a.w.run(), a.trace, &a.quotients, &b.geometry};
  CHECK_THROWS_AS(certify_run(mixed, xi_of_d(10), 0.1), Error);
  CHECK_THROWS_AS(certify_run(a.inputs(), xi_of_d(11), 0.1), Error);
}

TEST_CASE("empirical constant over 200 seeds") {
  const auto xi = xi_of_d(10);
  const auto est = estimate_constant(10, 2000, 0.2, 200, 1000, xi);
  CHECK(est.seeds == 200);
  CHECK(est.fraction >= 0.0);
  CHECK(est.fraction <= 1.0);
  CHECK(est.c_hat == doctest::Approx(est.fraction * 0.04 * 2000 / 2211.0));
  CHECK(est.mean_delta_star > 0.0);
  MESSAGE("delta 0.2, d 10, p 2000: exceed fraction " << est.fraction << ", C estimate " << est.c_hat
                                                     << ", mean delta* " << est.mean_delta_star);
}
