#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cat0lab/errors.hpp"
#include "cat0lab/walk.hpp"

using namespace cat0lab;

namespace {

GroupElement zrep(const Group& g, std::int64_t k) {
  GroupElement e;
  e.group = &g;
  e.rep = std::vector<std::int64_t>{k};
  return e;
}

FiniteSupportMeasure std_uniform(std::shared_ptr<const Group> g) {
  return FiniteSupportMeasure::uniform(g, g->standard_generators().elements);
}

// 2^n path enumeration for the +-1 walk on Z: E|X_n| as an exact rational.
Rational z_walk_oracle(int n) {
  Rational total(0);
  for (std::uint64_t bits = 0; bits < (1ull << n); ++bits) {
    int pos = 0;
    for (int i = 0; i < n; ++i) pos += (bits >> i) & 1 ? 1 : -1;
    total = total + Rational(std::abs(pos));
  }
  return total / Rational(std::int64_t(1) << n);
}

}  // namespace

TEST_CASE("Z exact drift table matches the 2^n path oracle up to n=10") {
  auto z = Group::lattice(1);
  auto mu = FiniteSupportMeasure::uniform(z, {zrep(*z, 1), zrep(*z, -1)});
  auto s = drift_series_exact(mu, z->standard_generators(), 10);
  REQUIRE(s.exact);
  CHECK(s.Ln_exact[1] == Rational(1));
  CHECK(s.Ln_exact[2] == Rational(1));
  CHECK(s.Ln_exact[4] == Rational(3, 2));
  for (int n = 1; n <= 10; ++n) CHECK(s.Ln_exact[n] == z_walk_oracle(n));
}

TEST_CASE("F2 exact: L^2 = 3/2") {
  auto f2 = Group::free_group(2);
  auto s = drift_series_exact(std_uniform(f2), f2->standard_generators(), 2);
  CHECK(s.Ln_exact[2] == Rational(3, 2));
}

TEST_CASE("drift series invariants: Ltilde, subadditivity, app-2 envelope") {
  for (auto g : {Group::lattice(1), Group::free_group(2),
                 Group::infinite_dihedral()}) {
    auto s = drift_series_exact(std_uniform(g), g->standard_generators(), 8);
    for (int n = 1; n <= 8; ++n) {
      Rational expect(0);
      for (int m = 1; m <= n; ++m) expect = std::max(expect, s.Ln_exact[m]);
      CHECK(s.Ltilde[n] == doctest::Approx(expect.to_double()).epsilon(1e-15));
      CHECK(s.Ltilde[n] >= s.Ln[n]);
      if (n > 1) CHECK(s.Ltilde[n] >= s.Ltilde[n - 1]);
    }
    // L^{m+n} <= L^m + L^n, exact rationals.
    for (int m = 1; m <= 7; ++m)
      for (int n = 1; m + n <= 8; ++n)
        CHECK(s.Ln_exact[m + n] <= s.Ln_exact[m] + s.Ln_exact[n]);
    // Ltilde^{ik} <= i * Ltilde^k.
    for (int i = 1; i <= 8; ++i)
      for (int k = 1; i * k <= 8; ++k)
        CHECK(s.Ltilde[i * k] <= i * s.Ltilde[k] + 1e-12);
  }
}

TEST_CASE("drift estimate is the prefix minimum and nonincreasing in n_max") {
  auto f2 = Group::free_group(2);
  auto mu = std_uniform(f2);
  auto S = f2->standard_generators();
  double prev = 1e18;
  for (int n_max = 1; n_max <= 6; ++n_max) {
    auto s = drift_series_exact(mu, S, n_max);
    double expect = 1e18;
    for (int n = 1; n <= n_max; ++n)
      expect = std::min(expect, s.Ln[n] / n);
    CHECK(s.drift_estimate == doctest::Approx(expect).epsilon(1e-15));
    CHECK(s.drift_estimate <= prev + 1e-15);
    CHECK(s.last_ratio == doctest::Approx(s.Ln[n_max] / n_max));
    prev = s.drift_estimate;
  }
}

TEST_CASE("sample_walk: determinism, length 0, increments in the support") {
  auto f2 = Group::free_group(2);
  auto mu = std_uniform(f2);
  auto w0 = sample_walk(mu, 0, 42);
  REQUIRE(w0.trajectory.size() == 1);
  CHECK(f2->is_identity(w0.trajectory[0]));

  auto w1 = sample_walk(mu, 50, 42);
  auto w2 = sample_walk(mu, 50, 42);
  auto w3 = sample_walk(mu, 50, 43);
  REQUIRE(w1.trajectory.size() == 51);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i <= 50; ++i) {
    all_equal &= f2->equal(w1.trajectory[i], w2.trajectory[i]);
    any_diff |= !f2->equal(w1.trajectory[i], w3.trajectory[i]);
    if (i > 0) {
      GroupElement inc = f2->multiply(f2->inverse(w1.trajectory[i - 1]),
                                      w1.trajectory[i]);
      CHECK(mu.mass(inc) > Rational(0));
    }
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("Monte Carlo drift agrees with the exact series on Z within 4 sigma") {
  auto z = Group::lattice(1);
  auto mu = FiniteSupportMeasure::uniform(z, {zrep(*z, 1), zrep(*z, -1)});
  auto S = z->standard_generators();
  auto exact = drift_series_exact(mu, S, 12);
  auto mc = drift_series_monte_carlo(mu, S, 12, 4000, 2024);
  REQUIRE_FALSE(mc.exact);
  for (int n = 1; n <= 12; ++n) {
    CHECK(mc.stderrs[n] >= 0.0);
    CHECK(std::abs(mc.Ln[n] - exact.Ln[n]) <= 4.0 * mc.stderrs[n] + 1e-9);
  }
}

TEST_CASE("F2 Monte Carlo drift approaches 1/2 (birth-death oracle)") {
  auto f2 = Group::free_group(2);
  auto mc = drift_series_monte_carlo(std_uniform(f2),
                                     f2->standard_generators(), 200, 2000, 7);
  CHECK(mc.drift_estimate == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("conv-comb bound: exact mode on Z and D_inf") {
  ConvexCombinationSpec spec;
  spec.coefficients = {Rational(1, 2), Rational(1, 2)};
  for (auto g : {Group::lattice(1), Group::infinite_dihedral()}) {
    auto r = verify_conv_comb_bound(std_uniform(g), spec,
                                    g->standard_generators(), 10);
    CHECK(r.exact);
    CHECK(r.factor == Rational(5, 2));
    CHECK(r.holds);
    // Recurrent walks: the estimate keeps shrinking.
    CHECK(r.mu_series.drift_estimate < 0.3);
  }
}

TEST_CASE("conv-comb bound: Monte Carlo mode on F2 with factor 5/2") {
  ConvexCombinationSpec spec;
  spec.coefficients = {Rational(1, 2), Rational(1, 2)};
  auto f2 = Group::free_group(2);
  auto r = verify_conv_comb_bound(std_uniform(f2), spec,
                                  f2->standard_generators(), 150, 1500, 99);
  CHECK_FALSE(r.exact);
  CHECK(r.factor == Rational(5, 2));
  CHECK(r.holds);
  CHECK(r.lhs < r.rhs);  // actual gap is wide (~1.1 vs ~1.25)
}

TEST_CASE("drift CSV has the advertised columns") {
  auto z = Group::lattice(1);
  auto mu = FiniteSupportMeasure::uniform(z, {zrep(*z, 1), zrep(*z, -1)});
  auto s = drift_series_exact(mu, z->standard_generators(), 4);
  std::ostringstream os;
  write_drift_csv(os, s);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "n,Ln,Ltilde,Ln_over_n,stderr");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 4);
  CHECK(os.str().find("4,1.5,1.5,0.375,0") != std::string::npos);
}

TEST_CASE("walk argument validation") {
  auto z = Group::lattice(1);
  auto mu = FiniteSupportMeasure::uniform(z, {zrep(*z, 1), zrep(*z, -1)});
  auto S = z->standard_generators();
  CHECK_THROWS_AS(drift_series_exact(mu, S, 0), DomainError);
  CHECK_THROWS_AS(drift_series_monte_carlo(mu, S, 5, 1, 0), DomainError);
  CHECK_THROWS_AS(sample_walk(mu, -1, 0), DomainError);
}
