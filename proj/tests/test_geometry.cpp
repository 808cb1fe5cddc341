#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <deque>
#include <random>
#include <sstream>

#include <stretchchaos/geometry.hpp>

using namespace sc;

namespace {

// Independent reference for grid_cut_check: the mask separates left from
// right exactly when no 8-connected corridor of empty cells joins the
// first column to the last one (and symmetrically for down-up).
bool flood_fill_cut(const GridMask& m, CutDirection dir) {
  const int w = m.width, h = m.height;
  std::vector<char> seen(static_cast<size_t>(w) * h, 0);
  std::deque<std::pair<int, int>> queue;
  auto push = [&](int i, int j) {
    if (i < 0 || i >= w || j < 0 || j >= h) return;
    const size_t idx = static_cast<size_t>(j) * w + i;
    if (seen[idx] || m.at(i, j)) return;
    seen[idx] = 1;
    queue.emplace_back(i, j);
  };
  if (dir == CutDirection::LeftRight) {
    for (int j = 0; j < h; ++j) push(0, j);
  } else {
    for (int i = 0; i < w; ++i) push(i, 0);
  }
  while (!queue.empty()) {
    auto [i, j] = queue.front();
    queue.pop_front();
    if (dir == CutDirection::LeftRight && i == w - 1) return false;
    if (dir == CutDirection::DownUp && j == h - 1) return false;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj)
        if (di || dj) push(i + di, j + dj);
  }
  return true;
}

GridMask mask_from_bits(int w, int h, unsigned bits) {
  GridMask m = GridMask::empty(w, h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i)
      if (bits & (1u << (j * w + i))) m.set(i, j, true);
  return m;
}

}  // namespace

TEST_CASE("grid cut check agrees with flood fill on every 3x3 mask") {
  for (unsigned bits = 0; bits < 512; ++bits) {
    const GridMask m = mask_from_bits(3, 3, bits);
    CAPTURE(bits);
    CHECK(grid_cut_check(m, CutDirection::LeftRight) ==
          flood_fill_cut(m, CutDirection::LeftRight));
    CHECK(grid_cut_check(m, CutDirection::DownUp) == flood_fill_cut(m, CutDirection::DownUp));
  }
}

TEST_CASE("grid cut check agrees with flood fill on random 64x64 masks") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    // mix densities so both cut and non-cut cases appear
    const double density = 0.3 + 0.4 * (trial % 10) / 9.0;
    GridMask m = GridMask::empty(64, 64);
    std::bernoulli_distribution cell(density);
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 64; ++i) m.set(i, j, cell(rng));
    CAPTURE(trial);
    CHECK(grid_cut_check(m, CutDirection::LeftRight) ==
          flood_fill_cut(m, CutDirection::LeftRight));
    CHECK(grid_cut_check(m, CutDirection::DownUp) == flood_fill_cut(m, CutDirection::DownUp));
  }
}

TEST_CASE("a spanning occupied continuum exists exactly when the mask cuts") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    GridMask m = GridMask::empty(16, 16);
    std::bernoulli_distribution cell(0.45 + 0.2 * (trial % 5) / 4.0);
    for (int j = 0; j < 16; ++j)
      for (int i = 0; i < 16; ++i) m.set(i, j, cell(rng));
    const bool cuts = grid_cut_check(m, CutDirection::LeftRight);
    const auto continuum = grid_spanning_continuum(m, CutDirection::LeftRight);
    CAPTURE(trial);
    CHECK(cuts == continuum.has_value());
    if (continuum) {
      bool bottom = false, top = false;
      for (auto [i, j] : *continuum) {
        CHECK(m.at(i, j));
        bottom |= j == 0;
        top |= j == 15;
      }
      CHECK(bottom);
      CHECK(top);
    }
  }
}

TEST_CASE("pbm round trip preserves masks") {
  std::mt19937_64 rng(3);
  GridMask m = GridMask::empty(13, 7);
  std::bernoulli_distribution cell(0.5);
  for (int j = 0; j < 7; ++j)
    for (int i = 0; i < 13; ++i) m.set(i, j, cell(rng));
  std::stringstream ss;
  write_pbm(ss, m);
  const GridMask back = read_pbm(ss);
  REQUIRE(back.width == m.width);
  REQUIRE(back.height == m.height);
  CHECK(back.cells == m.cells);
}

TEST_CASE("rasterize samples cell centres") {
  const Box box{0, 1, 0, 1};
  const auto disc = [](const Point& p) { return dist(p, {0.5, 0.5}) <= 0.4; };
  const GridMask m = rasterize(disc, box, 32, 32);
  CHECK(m.at(16, 16));
  CHECK_FALSE(m.at(0, 0));
  CHECK_FALSE(m.at(31, 31));
}

TEST_CASE("oriented rectangle from graphs carries exact sides") {
  const auto r = make_rect_from_graphs(
      "strip", [](double x) { return x * x; }, [](double x) { return x * x + 1.0; }, 0.0, 2.0);
  CHECK(r.contains({1.0, 1.5}));
  CHECK_FALSE(r.contains({1.0, 2.5}));
  CHECK(r.side_left.front().x == doctest::Approx(0.0));
  CHECK(r.side_right.front().x == doctest::Approx(2.0));
  // left and right sides are vertical segments
  for (const Point& p : r.side_left) CHECK(p.x == doctest::Approx(0.0));
  for (const Point& p : r.side_right) CHECK(p.x == doctest::Approx(2.0));
}

TEST_CASE("test path families join the left and right sides") {
  const auto r = make_rect_from_graphs(
      "box", [](double) { return 0.0; }, [](double) { return 1.0; }, 0.0, 1.0);
  const auto paths = sample_test_paths(r, 12, 65, 42);
  REQUIRE(static_cast<int>(paths.size()) == 12);
  for (const auto& path : paths) {
    REQUIRE(path.size() == 65);
    CHECK(dist_to_polyline(path.points.front(), r.side_left) < 1e-9);
    CHECK(dist_to_polyline(path.points.back(), r.side_right) < 1e-9);
    for (const Point& p : path.points) {
      CHECK(p.x >= -1e-12);
      CHECK(p.x <= 1.0 + 1e-12);
      CHECK(p.y >= -1e-12);
      CHECK(p.y <= 1.0 + 1e-12);
    }
  }
  // deterministic in the seed
  const auto again = sample_test_paths(r, 12, 65, 42);
  for (size_t i = 0; i < paths.size(); ++i)
    for (size_t j = 0; j < paths[i].size(); ++j) {
      CHECK(paths[i].points[j].x == again[i].points[j].x);
      CHECK(paths[i].points[j].y == again[i].points[j].y);
    }
}

TEST_CASE("side axis V swaps the roles of the parameter edges") {
  auto param = [](double u, double v) { return Point{u, v}; };
  auto contains = [](const Point& p) {
    return p.x >= 0 && p.x <= 1 && p.y >= 0 && p.y <= 1;
  };
  const auto r = make_oriented_rectangle("sq", param, contains, SideAxis::V, 33);
  // with V, left/right lie on v = 0 / v = 1, i.e. horizontal edges
  for (const Point& p : r.side_left) CHECK(p.y == doctest::Approx(0.0));
  for (const Point& p : r.side_right) CHECK(p.y == doctest::Approx(1.0));
  const auto paths = sample_test_paths(r, 4, 17, 1);
  for (const auto& path : paths) {
    CHECK(path.points.front().y == doctest::Approx(0.0));
    CHECK(path.points.back().y == doctest::Approx(1.0));
  }
}

TEST_CASE("distance to polyline") {
  const std::vector<Point> seg{{0, 0}, {1, 0}};
  CHECK(dist_to_polyline({0.5, 0.25}, seg) == doctest::Approx(0.25));
  CHECK(dist_to_polyline({-0.3, 0.4}, seg) == doctest::Approx(0.5));
  CHECK(dist_to_polyline({2.0, 0.0}, seg) == doctest::Approx(1.0));
}
