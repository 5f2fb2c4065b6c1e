#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "cat0lab/action.hpp"
#include "cat0lab/errors.hpp"
#include "cat0lab/harmonic.hpp"

using namespace cat0lab;
using nlohmann::json;

namespace {

Isometry rot2(double angle) {
  double c = std::cos(angle), s = std::sin(angle);
  return Isometry{EuclideanIso{{{c, -s}, {s, c}}, {0.0, 0.0}}};
}

Isometry refl2(double axis_angle) {
  double c = std::cos(2 * axis_angle), s = std::sin(2 * axis_angle);
  return Isometry{EuclideanIso{{{c, s}, {s, -c}}, {0.0, 0.0}}};
}

Isometry transl(std::vector<double> t) {
  std::size_t n = t.size();
  std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) q[i][i] = 1.0;
  return Isometry{EuclideanIso{std::move(q), std::move(t)}};
}

// Z acting on R by translation t
IsometricAction z_translation(double t) {
  return IsometricAction::from_images(Group::lattice(1), Space::euclidean(1),
                                      {transl({t})});
}

// Z/4 rotating the plane by 90 degrees
IsometricAction z4_rotation() {
  return IsometricAction::from_images(Group::cyclic(4), Space::euclidean(2),
                                      {rot2(M_PI / 2)});
}

// Z acting on H^2 by z -> z + 1
IsometricAction parabolic() {
  return IsometricAction::from_images(Group::lattice(1),
                                      Space::hyperbolic_plane(),
                                      {Isometry{MobiusIso{1, 1, 0, 1}}});
}

// Z/4 rotating the legs of a 4-leg unit star (center vertex 0)
IsometricAction star_rotation() {
  auto star = Space::tree(
      5, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {0, 4, 1.0}});
  return IsometricAction::from_images(Group::cyclic(4), star,
                                      {Isometry{TreeIso{{0, 2, 3, 4, 1}}}});
}

// D_inf on R: s0 x = -x, s1 x = -x + 1
IsometricAction dinf_line() {
  Isometry s0{EuclideanIso{{{-1.0}}, {0.0}}};
  Isometry s1{EuclideanIso{{{-1.0}}, {1.0}}};
  return IsometricAction::from_images(Group::infinite_dihedral(),
                                      Space::euclidean(1), {s0, s1});
}

double dist(const IsometricAction& a, const Point& x, const Point& y) {
  return a.space().distance(x, y);
}

}  // namespace

TEST_CASE("isometry algebra on examples") {
  auto e2 = Space::euclidean(2);
  Isometry r = rot2(M_PI / 2);
  Isometry t = transl({1.0, 2.0});

  Point p{std::vector<double>{1.0, 0.0}};
  Point rp = apply_isometry(*e2, r, p);
  CHECK(std::get<std::vector<double>>(rp.rep)[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::get<std::vector<double>>(rp.rep)[1] == doctest::Approx(1.0));

  // compose(f, g) applies g first
  Point q = apply_isometry(*e2, compose(*e2, t, r), p);
  CHECK(std::get<std::vector<double>>(q.rep)[0] == doctest::Approx(1.0));
  CHECK(std::get<std::vector<double>>(q.rep)[1] == doctest::Approx(3.0));

  // inverse and powers
  Point back = apply_isometry(*e2, inverse_isometry(*e2, t),
                              apply_isometry(*e2, t, p));
  CHECK(dist(z4_rotation(), back, p) < 1e-12);
  Isometry r4 = isometry_power(*e2, r, 4);
  CHECK(points_equal(*e2, apply_isometry(*e2, r4, p), p, 1e-12));
  Isometry rm1 = isometry_power(*e2, r, -1);
  CHECK(points_equal(*e2, apply_isometry(*e2, compose(*e2, r, rm1), p), p, 1e-12));

  auto h2 = Space::hyperbolic_plane();
  Isometry shift{MobiusIso{1, 1, 0, 1}};
  Point i{H2Point{0.0, 1.0}};
  Point si = apply_isometry(*h2, shift, i);
  CHECK(std::get<H2Point>(si.rep).x == doctest::Approx(1.0));
  CHECK(std::get<H2Point>(si.rep).y == doctest::Approx(1.0));
  // z -> -1/z fixes i
  Isometry inv{MobiusIso{0, -1, 1, 0}};
  Point ii = apply_isometry(*h2, inv, i);
  CHECK(std::get<H2Point>(ii.rep).x == doctest::Approx(0.0));
  CHECK(std::get<H2Point>(ii.rep).y == doctest::Approx(1.0));
}

TEST_CASE("isometry validation rejects bad data") {
  auto e2 = Space::euclidean(2);
  CHECK_THROWS_AS(validate_isometry(
                      *e2, Isometry{EuclideanIso{{{1, 1}, {0, 1}}, {0, 0}}}),
                  DomainError);
  CHECK_THROWS_AS(validate_isometry(*e2, Isometry{MobiusIso{1, 0, 0, 1}}),
                  DomainError);  // kind mismatch
  auto h2 = Space::hyperbolic_plane();
  CHECK_THROWS_AS(validate_isometry(*h2, Isometry{MobiusIso{2, 0, 0, 1}}),
                  DomainError);  // det 2
  auto star = Space::tree(5, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {0, 4, 2.0}});
  // leg 4 has a different length; rotating it is not an isometry
  CHECK_THROWS_AS(validate_isometry(*star, Isometry{TreeIso{{0, 2, 3, 4, 1}}}),
                  DomainError);
  CHECK_THROWS_AS(validate_isometry(*star, Isometry{TreeIso{{0, 1, 1, 3, 4}}}),
                  DomainError);  // not a permutation
}

TEST_CASE("action construction checks relations") {
  auto e2 = Space::euclidean(2);
  // lattice images must commute: rotation and off-axis translation do not
  CHECK_THROWS_AS(IsometricAction::from_images(
                      Group::lattice(2), e2, {rot2(M_PI / 2), transl({1, 0})}),
                  DomainError);
  CHECK_NOTHROW(IsometricAction::from_images(
      Group::lattice(2), e2, {transl({1, 0}), transl({0, 1})}));
  // cyclic: order-4 relation
  CHECK_THROWS_AS(IsometricAction::from_images(Group::cyclic(4), e2,
                                               {rot2(M_PI / 3)}),
                  DomainError);
  // dihedral: images must be involutions
  CHECK_THROWS_AS(IsometricAction::from_images(
                      Group::infinite_dihedral(), Space::euclidean(1),
                      {transl({1.0}), Isometry{EuclideanIso{{{-1.0}}, {0.0}}}}),
                  DomainError);
  CHECK_THROWS_AS(IsometricAction::from_images(Group::cyclic(4), e2,
                                               {rot2(M_PI / 2), rot2(M_PI)}),
                  DomainError);  // wrong count
}

TEST_CASE("homomorphism and isometry invariants on sampled inputs") {
  std::mt19937_64 rng(7);
  std::vector<IsometricAction> actions;
  actions.push_back(z4_rotation());
  actions.push_back(z_translation(0.75));
  actions.push_back(dinf_line());
  actions.push_back(star_rotation());
  actions.push_back(parabolic());
  // free group on two rotations about different centers
  Isometry ra = rot2(0.7);
  Isometry rb = compose(*Space::euclidean(2), transl({1.0, 0.0}),
                        compose(*Space::euclidean(2), rot2(1.3),
                                transl({-1.0, 0.0})));
  actions.push_back(IsometricAction::from_images(
      Group::free_group(2), Space::euclidean(2), {ra, rb}));
  // product: Z^2 on R x H^2, one factor each
  {
    auto prod = Space::product({Space::euclidean(1), Space::hyperbolic_plane()});
    Isometry g1{ProductIso{{transl({1.0}), Isometry{MobiusIso{}}}}};
    Isometry g2{ProductIso{
        {Isometry{EuclideanIso{{{1.0}}, {0.0}}}, Isometry{MobiusIso{1, 1, 0, 1}}}}};
    actions.push_back(
        IsometricAction::from_images(Group::lattice(2), prod, {g1, g2}));
  }

  for (const auto& a : actions) {
    const Space& s = a.space();
    auto ball = a.group().ball(4, a.group().standard_generators());
    std::uniform_int_distribution<std::size_t> pick(0, ball.size() - 1);
    GroupElement e = a.group().identity();
    for (int trial = 0; trial < 250; ++trial) {
      const GroupElement& g = ball.entries[pick(rng)].element;
      const GroupElement& h = ball.entries[pick(rng)].element;
      Point x = s.random_point(rng);
      Point y = s.random_point(rng);
      CHECK(points_equal(s, a.apply(e, x), x, 1e-12));
      Point lhs = a.apply(a.group().multiply(g, h), x);
      Point rhs = a.apply(g, a.apply(h, x));
      CHECK(s.distance(lhs, rhs) < 1e-9);
      CHECK(s.distance(a.apply(g, x), a.apply(g, y)) ==
            doctest::Approx(s.distance(x, y)).epsilon(1e-9));
    }
  }
}

TEST_CASE("displacement examples") {
  auto z4 = z4_rotation();
  GeneratingSet s4 = z4.group().standard_generators();
  CHECK(displacement(z4, Point{std::vector<double>{0.0, 0.0}}, s4) == 0.0);

  auto zt = z_translation(0.4);
  GeneratingSet sz = zt.group().standard_generators();
  for (double x : {-3.0, 0.0, 1.7})
    CHECK(displacement(zt, Point{std::vector<double>{x}}, sz) ==
          doctest::Approx(0.4).epsilon(1e-12));

  auto par = parabolic();
  GeneratingSet sp = par.group().standard_generators();
  CHECK(displacement(par, Point{H2Point{0.0, 1.0}}, sp) ==
        doctest::Approx(std::acosh(1.5)));
  for (double y : {0.5, 2.0, 10.0})
    CHECK(displacement(par, Point{H2Point{3.0, y}}, sp) ==
          doctest::Approx(std::acosh(1.0 + 1.0 / (2 * y * y))));
}

TEST_CASE("energy examples and lower bound") {
  auto z4 = z4_rotation();
  auto mu4 = FiniteSupportMeasure::uniform(
      z4.group_ptr(), z4.group().standard_generators().elements);
  CHECK(energy(z4, mu4, Point{std::vector<double>{0.0, 0.0}}).energy == 0.0);
  EnergyReport r = energy(z4, mu4, Point{std::vector<double>{1.0, 0.0}});
  CHECK(r.energy == doctest::Approx(2.0).epsilon(1e-12));

  auto zt = z_translation(0.7);
  auto muz = FiniteSupportMeasure::uniform(
      zt.group_ptr(), zt.group().standard_generators().elements);
  CHECK(energy(zt, muz, Point{std::vector<double>{5.0}}).energy ==
        doctest::Approx(0.49).epsilon(1e-12));

  // lower bound at sampled basepoints for several actions
  std::mt19937_64 rng(11);
  for (const auto& a : {z4_rotation(), parabolic(), star_rotation()}) {
    auto mu = FiniteSupportMeasure::uniform(
        a.group_ptr(), a.group().standard_generators().elements);
    for (int i = 0; i < 100; ++i) {
      Point x = a.space().random_point(rng);
      EnergyReport er = energy(a, mu, x);
      CHECK(er.energy >= er.lower_bound - 1e-9);
    }
  }
}

TEST_CASE("minimize_energy: rotation converges to the origin") {
  auto a = z4_rotation();
  auto mu = FiniteSupportMeasure::uniform(
      a.group_ptr(), a.group().standard_generators().elements);
  MinimizeOptions mo;
  mo.max_iter = 200;
  MinimizeResult res = minimize_energy(a, mu, Point{std::vector<double>{1.0, 0.0}}, mo);
  CHECK(res.status == MinimizeStatus::converged);
  CHECK(res.iterations <= 200);
  CHECK(dist(a, res.map.basepoint, Point{std::vector<double>{0.0, 0.0}}) < 1e-6);
  CHECK(res.report.energy < 1e-12);
  for (std::size_t i = 1; i < res.energy_trace.size(); ++i)
    CHECK(res.energy_trace[i] <= res.energy_trace[i - 1] + 1e-10);
}

TEST_CASE("minimize_energy: translation landscape is flat, not escaped") {
  auto a = z_translation(1.5);
  auto mu = FiniteSupportMeasure::uniform(
      a.group_ptr(), a.group().standard_generators().elements);
  MinimizeResult res =
      minimize_energy(a, mu, Point{std::vector<double>{3.0}}, {});
  CHECK(res.status == MinimizeStatus::converged_flat);
  CHECK(res.report.energy == doctest::Approx(2.25).epsilon(1e-12));
  // grid check: the energy really is constant
  for (double x = -4.0; x <= 4.0; x += 0.5)
    CHECK(energy(a, mu, Point{std::vector<double>{x}}).energy ==
          doctest::Approx(2.25).epsilon(1e-12));
}

TEST_CASE("minimize_energy: parabolic escapes upward") {
  auto a = parabolic();
  auto mu = FiniteSupportMeasure::uniform(
      a.group_ptr(), a.group().standard_generators().elements);
  MinimizeOptions mo;
  mo.escape_radius = 3.0;
  mo.max_iter = 100'000;
  mo.record_iterates = true;
  MinimizeResult res = minimize_energy(a, mu, Point{H2Point{0.0, 1.0}}, mo);
  CHECK(res.status == MinimizeStatus::escaped);
  const auto& first = std::get<H2Point>(res.iterate_trace.front().rep);
  const auto& last = std::get<H2Point>(res.iterate_trace.back().rep);
  CHECK(last.y > std::exp(3.0) * 0.9);
  CHECK(last.y > first.y);
  CHECK(res.report.energy < res.energy_trace.front());
  for (std::size_t i = 1; i < res.energy_trace.size(); ++i)
    CHECK(res.energy_trace[i] <= res.energy_trace[i - 1] + 1e-10);
}

TEST_CASE("minimize_energy is scaling invariant") {
  auto a = z4_rotation();
  auto mu = FiniteSupportMeasure::uniform(
      a.group_ptr(), a.group().standard_generators().elements);
  Point start{std::vector<double>{1.0, 0.25}};
  MinimizeOptions mo;
  mo.tol = 0.0;
  mo.max_iter = 40;
  mo.record_iterates = true;
  MinimizeResult base = minimize_energy(a, mu, start, mo);
  for (double lambda : {0.5, 3.0}) {
    MinimizeResult scaled = minimize_energy(a.rescaled(lambda), mu, start, mo);
    REQUIRE(scaled.iterate_trace.size() == base.iterate_trace.size());
    for (std::size_t i = 0; i < base.iterate_trace.size(); ++i) {
      CHECK(points_equal(a.space(), base.iterate_trace[i],
                         scaled.iterate_trace[i], 1e-9));
      CHECK(scaled.energy_trace[i] ==
            doctest::Approx(lambda * lambda * base.energy_trace[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("mu_laplacian examples") {
  auto z = Group::lattice(1);
  auto mu = FiniteSupportMeasure::uniform(z, z->standard_generators().elements);
  auto val = [&](std::int64_t k) {
    return GroupElement{z.get(), std::vector<std::int64_t>{k}};
  };
  auto coord = [](const GroupElement& g) {
    return static_cast<double>(std::get<std::vector<std::int64_t>>(g.rep)[0]);
  };
  for (std::int64_t k : {-5, 0, 3}) {
    CHECK(mu_laplacian([](const GroupElement&) { return 2.5; }, mu, val(k)) ==
          doctest::Approx(0.0));
    CHECK(mu_laplacian(coord, mu, val(k)) == doctest::Approx(0.0));
    CHECK(mu_laplacian([&](const GroupElement& g) {
            double x = coord(g);
            return x * x;
          }, mu, val(k)) == doctest::Approx(-1.0));
  }
}

TEST_CASE("pullback horofunction: translation action") {
  double t = 0.3;
  auto a = z_translation(t);
  EquivariantMap f{a, Point{std::vector<double>{0.0}}};
  BusemannDirection xi{BusemannDirection::Euclidean{{1.0}}};
  auto phi = pullback_horofunction(f, xi);
  auto z = a.group_ptr();
  CHECK(phi(z->identity()) == doctest::Approx(0.0));
  for (std::int64_t k : {-4, -1, 1, 2, 7}) {
    GroupElement g{z.get(), std::vector<std::int64_t>{k}};
    CHECK(phi(g) == doctest::Approx(-static_cast<double>(k) * t));
  }
  auto mu = FiniteSupportMeasure::uniform(z, z->standard_generators().elements);
  for (std::int64_t k = -20; k <= 20; ++k) {
    GroupElement g{z.get(), std::vector<std::int64_t>{k}};
    CHECK(std::abs(mu_laplacian(phi, mu, g)) <= 1e-12);
  }
}

TEST_CASE("pullback horofunction is 1-Lipschitz against orbit distances") {
  std::mt19937_64 rng(23);
  auto a = parabolic();
  EquivariantMap f{a, Point{H2Point{0.3, 2.0}}};
  BusemannDirection xi{BusemannDirection::Hyperbolic{std::nullopt}};
  auto phi = pullback_horofunction(f, xi);
  auto ball = a.group().ball(6, a.group().standard_generators());
  std::uniform_int_distribution<std::size_t> pick(0, ball.size() - 1);
  for (int i = 0; i < 200; ++i) {
    const auto& g = ball.entries[pick(rng)].element;
    const auto& h = ball.entries[pick(rng)].element;
    CHECK(std::abs(phi(g) - phi(h)) <=
          a.space().distance(f.at(g), f.at(h)) + 1e-12);
  }
}

TEST_CASE("check_mu_subharmonic") {
  auto z = Group::lattice(1);
  auto mu = FiniteSupportMeasure::uniform(z, z->standard_generators().elements);
  std::vector<GroupElement> samples;
  for (std::int64_t k = -10; k <= 10; ++k)
    samples.push_back({z.get(), std::vector<std::int64_t>{k}});

  SubharmonicReport rep = check_mu_subharmonic(
      [](const GroupElement&) { return 1.0; }, mu, samples, 1e-9);
  CHECK(rep.pass);
  CHECK(rep.max_laplacian == doctest::Approx(0.0));

  // harmonic map of the translation action: linear pullback, laplacian 0
  auto a = z_translation(0.8);
  auto za = a.group_ptr();
  auto mua = FiniteSupportMeasure::uniform(za, za->standard_generators().elements);
  std::vector<GroupElement> samples_a;
  for (std::int64_t k = -10; k <= 10; ++k)
    samples_a.push_back({za.get(), std::vector<std::int64_t>{k}});
  EquivariantMap f{a, Point{std::vector<double>{0.0}}};
  auto phi = pullback_horofunction(
      f, BusemannDirection{BusemannDirection::Euclidean{{1.0}}});
  rep = check_mu_subharmonic(phi, mua, samples_a, 1e-9);
  CHECK(rep.pass);
  CHECK(std::abs(rep.max_laplacian) <= 1e-12);

  // rotation action at its fixed point: orbit symmetry kills the first moment
  auto z4 = z4_rotation();
  auto mu4 = FiniteSupportMeasure::uniform(
      z4.group_ptr(), z4.group().standard_generators().elements);
  EquivariantMap f4{z4, Point{std::vector<double>{0.0, 0.0}}};
  auto phi4 = pullback_horofunction(
      f4, BusemannDirection{BusemannDirection::Euclidean{{1.0, 0.0}}});
  std::vector<GroupElement> s4;
  for (std::int64_t k = 0; k < 4; ++k)
    s4.push_back({z4.group_ptr().get(), k});
  SubharmonicReport rep4 = check_mu_subharmonic(phi4, mu4, s4, 1e-9);
  CHECK(rep4.pass);
}

TEST_CASE("action JSON round trip") {
  auto a = z4_rotation();
  json j = a.to_json();
  IsometricAction b = IsometricAction::from_json(
      a.group_ptr(), a.space_ptr(), json{{"images", j.at("images")}});
  Point p{std::vector<double>{0.7, -0.2}};
  GroupElement g{a.group_ptr().get(), std::int64_t{3}};
  CHECK(points_equal(a.space(), a.apply(g, p), b.apply(g, p), 1e-12));

  auto star = star_rotation();
  json js = isometry_to_json(star.space(), star.images()[0]);
  CHECK(js.at("kind") == "tree");
  Isometry back = isometry_from_json(star.space(), js);
  CHECK(std::get<TreeIso>(back.rep).vertex_map ==
        std::get<TreeIso>(star.images()[0].rep).vertex_map);

  CHECK_THROWS_AS(isometry_from_json(*Space::euclidean(2), json{{"kind", "nope"}}),
                  SchemaError);
  CHECK_THROWS_AS(IsometricAction::from_json(a.group_ptr(), a.space_ptr(),
                                             json::object()),
                  SchemaError);
}
