#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <stretchchaos/geometry.hpp>
#include <stretchchaos/models.hpp>
#include <stretchchaos/orbits.hpp>
#include <stretchchaos/stretching.hpp>

using namespace sc;

namespace {

OrientedRectangle unit_square(const std::string& name = "sq") {
  return make_rect_from_graphs(
      name, [](double) { return 0.0; }, [](double) { return 1.0; }, 0.0, 1.0);
}

RegionPredicate strip(const std::string& label, double x_lo, double x_hi) {
  return {label,
          [x_lo, x_hi](const Point& p) {
            return p.x >= x_lo && p.x <= x_hi && p.y >= 0.0 && p.y <= 1.0;
          },
          {x_lo, x_hi, 0.0, 1.0}};
}

}  // namespace

TEST_CASE("horizontal expansion by three stretches across two strips") {
  const auto sq = unit_square();
  // continuous 3-lap fold: each of [0,1/3], [1/3,2/3], [2/3,1] maps onto
  // [0,1], so the two outer strips are disjoint crossing regions
  const PlanarMap expand = [](const Point& p) {
    const double x = p.x <= 1.0 / 3.0   ? 3.0 * p.x
                     : p.x <= 2.0 / 3.0 ? 2.0 - 3.0 * p.x
                                        : 3.0 * p.x - 2.0;
    return Point{x, 0.5 * p.y + 0.25};
  };
  const auto paths = sample_test_paths(sq, 10, 257, 5);
  const auto rep = check_stretch(expand, sq, sq, {strip("K0", 0.0, 1.0 / 3.0),
                                                  strip("K1", 2.0 / 3.0, 1.0)},
                                 paths, {});
  CHECK(rep.crossing_number == 2);
  CHECK(rep.all_pass());
  CHECK_FALSE(rep.any_inconclusive);
  for (const auto& r : rep.regions) CHECK(r.paths_witnessed == r.paths_tested);
}

TEST_CASE("contraction stretches across no strip") {
  const auto sq = unit_square();
  const PlanarMap contract = [](const Point& p) {
    return Point{0.5 * p.x + 0.25, 0.5 * p.y + 0.25};
  };
  const auto paths = sample_test_paths(sq, 8, 129, 5);
  const auto rep = check_stretch(contract, sq, sq, {strip("K0", 0.0, 1.0)}, paths, {});
  CHECK(rep.crossing_number == 0);
  CHECK_FALSE(rep.all_pass());
}

TEST_CASE("crossing count sees every fold of a zigzag") {
  const auto sq = unit_square();
  // 4 monotone laps, each overshooting [0,1] so the image leaves the
  // square between laps and every traversal is a separate crossing
  const PlanarMap zigzag = [](const Point& p) {
    const double s = std::fmod(4.0 * p.x, 2.0);
    const double tri = s <= 1.0 ? s : 2.0 - s;
    return Point{1.4 * tri - 0.2, 0.5};
  };
  const Path fiber = make_path([](double t) { return Point{t, 0.5}; }, 513);
  CHECK(crossing_count(zigzag, sq, fiber) == 4);
}

TEST_CASE("interval map with interior fixed point only: whole-domain strip passes, split strip fails") {
  const CounterexampleParams cp;  // rises above the diagonal on [0,a], falls below on [b,1]
  const PlanarMap embedded = [cp](const Point& p) {
    return Point{eval_counterexample(cp, p.x), p.y};
  };
  const auto sq = unit_square();
  const auto paths = sample_test_paths(sq, 10, 257, 9);

  const auto whole = check_stretch(embedded, sq, sq, {strip("K0", cp.a, cp.b)}, paths, {});
  CHECK(whole.crossing_number == 1);

  RegionPredicate split{"K1",
                        [cp](const Point& p) {
                          return ((p.x >= 0.0 && p.x <= cp.a) || (p.x >= cp.b && p.x <= 1.0)) &&
                                 p.y >= 0.0 && p.y <= 1.0;
                        },
                        {0.0, 1.0, 0.0, 1.0}};
  const auto broken = check_stretch(embedded, sq, sq, {split}, paths, {});
  CHECK(broken.crossing_number == 0);
}

TEST_CASE("stretching to a displaced rectangle does not imply a fixed point") {
  // affine map sending the unit square to a vertical slab that crosses a
  // re-oriented copy of the square bottom-to-top; the only fixed point,
  // (0.75, 1.75), lies outside the square
  const PlanarMap slab = [](const Point& p) {
    return Point{0.5 + 0.2 * (p.y - 0.5), -0.5 + 3.0 * p.x};
  };
  const auto sq = unit_square();
  const auto reoriented = make_oriented_rectangle(
      "sq_v",
      [](double u, double v) {
        return Point{v, u};
      },
      [](const Point& p) { return p.x >= 0 && p.x <= 1 && p.y >= 0 && p.y <= 1; },
      SideAxis::U, 257);
  // left/right of the re-oriented square are its bottom/top edges
  for (const Point& p : reoriented.side_left) CHECK(p.y == doctest::Approx(0.0));

  RegionPredicate whole{"K0", sq.contains, sq.bbox};
  const auto paths = sample_test_paths(sq, 8, 257, 3);
  const auto rep = check_stretch(slab, sq, reoriented, {whole}, paths, {});
  CHECK(rep.crossing_number == 1);

  const auto fp = newton_periodic_point_2d(slab, {whole}, {0}, {});
  CHECK(fp.status == OrbitStatus::NotFound);
}

TEST_CASE("domain errors make paths inconclusive rather than failed") {
  const auto sq = unit_square();
  const PlanarMap partial = [](const Point& p) -> Point {
    if (p.x > 0.45 && p.x < 0.55) throw MapDomainError("hole");
    return Point{3.0 * p.x - 1.0, 0.5};
  };
  const auto paths = sample_test_paths(sq, 6, 257, 4);
  const auto rep = check_stretch(partial, sq, sq, {strip("K0", 0.3, 0.7)}, paths, {});
  CHECK(rep.any_inconclusive);
}

TEST_CASE("shrinking a region cannot create new crossings") {
  const auto sq = unit_square();
  const PlanarMap expand = [](const Point& p) { return Point{5.0 * p.x - 2.0, 0.5 * p.y + 0.2}; };
  const auto paths = sample_test_paths(sq, 8, 257, 6);
  const auto big = check_stretch(expand, sq, sq, {strip("K", 0.4, 0.6)}, paths, {});
  const auto small = check_stretch(expand, sq, sq, {strip("K", 0.45, 0.55)}, paths, {});
  REQUIRE(big.regions.size() == 1);
  REQUIRE(small.regions.size() == 1);
  CHECK(small.regions[0].paths_witnessed <= big.regions[0].paths_witnessed);
  // the full preimage strip maps across; the shrunk strip's image
  // [0.25, 0.75] no longer spans the square, so its crossing is gone
  CHECK(big.crossing_number == 1);
  CHECK(small.crossing_number == 0);
}

TEST_CASE("two-step composition certifies the double crossing") {
  const auto sq = unit_square();
  // both steps are the same 3-lap fold; H_i cap phi^-1(K_j) gives four
  // composite strips of width 1/9, all stretching across under phi o phi
  const PlanarMap expand = [](const Point& p) {
    const double x = p.x <= 1.0 / 3.0   ? 3.0 * p.x
                     : p.x <= 2.0 / 3.0 ? 2.0 - 3.0 * p.x
                                        : 3.0 * p.x - 2.0;
    return Point{x, 0.5 * p.y + 0.25};
  };
  const std::vector<RegionPredicate> regions{strip("H0", 0.0, 1.0 / 3.0),
                                             strip("H1", 2.0 / 3.0, 1.0)};
  const auto paths = sample_test_paths(sq, 8, 513, 7);
  const auto rep = check_composition(expand, expand, sq, sq, sq, regions, regions, paths, {});
  CHECK(rep.crossing_number == 4);
  CHECK(rep.all_pass());
}

TEST_CASE("overlapping regions are rejected") {
  const auto sq = unit_square();
  const PlanarMap id = [](const Point& p) { return p; };
  const auto paths = sample_test_paths(sq, 4, 65, 1);
  CHECK_THROWS_AS(check_stretch(id, sq, sq, {strip("A", 0.0, 0.6), strip("B", 0.4, 1.0)}, paths, {}),
                  std::invalid_argument);
}

TEST_CASE("report serialization carries the verdict") {
  const auto sq = unit_square();
  const PlanarMap expand = [](const Point& p) { return Point{3.0 * p.x - 1.0, 0.5 * p.y + 0.25}; };
  const auto paths = sample_test_paths(sq, 6, 257, 5);
  StretchOptions opts;
  opts.map_id = "triple";
  const auto rep = check_stretch(expand, sq, sq, {strip("K0", 1.0 / 3.0, 2.0 / 3.0)}, paths, opts);
  const auto j = rep.to_json();
  CHECK(j["schema"] == "sc-report/1");
  CHECK(j["map"] == "triple");
  CHECK(j["crossing_number"] == 1);
  CHECK(j["regions"].size() == 1);
}
