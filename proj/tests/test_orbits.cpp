#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <stretchchaos/models.hpp>
#include <stretchchaos/orbits.hpp>

using namespace sc;

namespace {

IntervalMap logistic(double mu) {
  return [mu](double x) { return mu * x * (1.0 - x); };
}

}  // namespace

TEST_CASE("covering intervals of the logistic map above mu = 4") {
  const auto iv = logistic_covering_intervals(4.5);
  REQUIRE(iv.size() == 2);
  // f = 1 exactly at the inner endpoints: mu x (1-x) = 1
  CHECK(iv[0].lo == 0.0);
  CHECK(iv[0].hi == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(iv[1].lo == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(iv[1].hi == 1.0);
  CHECK(4.5 * iv[0].hi * (1 - iv[0].hi) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(logistic_covering_intervals(3.9), std::invalid_argument);
}

TEST_CASE("1d covering finder hits the fixed point and the period-2 orbit") {
  const double mu = 4.5;
  const auto iv = logistic_covering_intervals(mu);
  const auto f = logistic(mu);

  // fixed point in the right interval: x = 1 - 1/mu
  const auto fp = covering_periodic_point_1d(f, iv, {1});
  REQUIRE(fp.status == OrbitStatus::Found);
  CHECK(fp.point.x == doctest::Approx(1.0 - 1.0 / mu).epsilon(1e-10));
  CHECK(fp.residual < 1e-12);

  // period-2 orbit: roots of mu^2 x^2 - mu(mu+1) x + (mu+1) = 0, the
  // smaller root (11 - sqrt(33))/18 lies in the left interval
  const auto p2 = covering_periodic_point_1d(f, iv, {0, 1});
  REQUIRE(p2.status == OrbitStatus::Found);
  CHECK(p2.point.x == doctest::Approx((11.0 - std::sqrt(33.0)) / 18.0).epsilon(1e-10));
  CHECK(p2.residual < 1e-12);
  CHECK(p2.itinerary_verified);
}

TEST_CASE("covering precondition failures are reported") {
  const auto f = logistic(4.5);
  // f([0, 0.1]) = [0, 0.405] does not reach [0.9, 1], so the word 01
  // violates the covering precondition
  const std::vector<Interval> bogus{{0.0, 0.1}, {0.9, 1.0}};
  CHECK_THROWS_AS(covering_periodic_point_1d(f, bogus, {0, 1}), std::runtime_error);
}

TEST_CASE("second iterate covering window for 2 < mu <= 4") {
  const double mu = 3.88;
  const auto cover = logistic_second_iterate_cover(mu);
  const auto f = logistic(mu);
  REQUIRE(cover.branches.size() == 2);
  const auto [lo, hi] = std::pair{cover.window.lo, cover.window.hi};
  CHECK(hi == doctest::Approx(f(0.5)));
  CHECK(lo > f(f(0.5)));
  // both branches sit inside the window and are disjoint
  CHECK(cover.branches[0].lo >= lo - 1e-12);
  CHECK(cover.branches[0].hi < cover.branches[1].lo);
  CHECK(cover.branches[1].hi <= hi + 1e-12);
  // each branch double-covers the window under f^2: check endpoint images
  auto f2 = [&](double x) { return f(f(x)); };
  for (const auto& b : cover.branches) {
    const double ea = f2(b.lo), eb = f2(b.hi);
    CHECK(std::min(ea, eb) <= lo + 1e-9);
    CHECK(std::max(ea, eb) >= hi - 1e-9);
  }
  CHECK_THROWS_AS(logistic_second_iterate_cover(1.5), std::invalid_argument);
}

TEST_CASE("planar newton finder localizes orbits of the embedded tripling map") {
  // (x, y) -> (3x mod-ish, contraction): strips [0,1/3], [2/3,1]
  const PlanarMap trip = [](const Point& p) {
    const double fx = p.x <= 0.5 ? 3.0 * p.x : 3.0 * p.x - 2.0;
    return Point{fx, 0.5 * p.y + 0.25};
  };
  RegionPredicate r0{"0",
                     [](const Point& p) {
                       return p.x >= 0 && p.x <= 1.0 / 3 && p.y >= 0 && p.y <= 1;
                     },
                     {0, 1.0 / 3, 0, 1}};
  RegionPredicate r1{"1",
                     [](const Point& p) {
                       return p.x >= 2.0 / 3 && p.x <= 1 && p.y >= 0 && p.y <= 1;
                     },
                     {2.0 / 3, 1, 0, 1}};

  // fixed point of the left branch is (0, 0.5); of the right branch (1, 0.5)
  const auto fp0 = newton_periodic_point_2d(trip, {r0, r1}, {0});
  REQUIRE(fp0.status == OrbitStatus::Found);
  CHECK(fp0.point.x == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(fp0.point.y == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(fp0.residual < 1e-9);

  // period 2 alternating: x solves 9x - 2 = x on the branch pattern 0,1
  const auto p2 = newton_periodic_point_2d(trip, {r0, r1}, {0, 1});
  REQUIRE(p2.status == OrbitStatus::Found);
  CHECK(p2.point.x == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(p2.itinerary_verified);
}

TEST_CASE("newton finder reports absence honestly") {
  const PlanarMap shift = [](const Point& p) { return Point{p.x + 0.5, p.y}; };
  RegionPredicate sq{"0",
                     [](const Point& p) { return p.x >= 0 && p.x <= 1 && p.y >= 0 && p.y <= 1; },
                     {0, 1, 0, 1}};
  const auto r = newton_periodic_point_2d(shift, {sq}, {0});
  CHECK(r.status == OrbitStatus::NotFound);
}

TEST_CASE("interval certificate for the logistic map at mu = 4.5") {
  const auto cert = chaos_certificate_interval(logistic(4.5), logistic_covering_intervals(4.5), 3);
  CHECK(cert.pass);
  CHECK(cert.stretch.crossing_number == 2);
  CHECK(cert.entropy_bound == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // 2 fixed + 1 period-2 + 2 period-3 primitive itineraries
  CHECK(cert.orbits.size() == 5);
  for (const auto& o : cert.orbits) {
    CHECK(o.status == OrbitStatus::Found);
    CHECK(o.residual < 1e-12);
  }
  const auto j = cert.to_json();
  // numeric fields are serialized as 17-digit strings
  CHECK(std::stod(j["entropy_bound"].get<std::string>()) == doctest::Approx(std::log(2.0)));
  CHECK(j["orbits"].size() == 5);
}
