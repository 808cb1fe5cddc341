#include "stretchchaos/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <random>

#include "stretchchaos/report.hpp"

namespace sc {

Point operator+(const Point& a, const Point& b) { return {a.x + b.x, a.y + b.y}; }
Point operator-(const Point& a, const Point& b) { return {a.x - b.x, a.y - b.y}; }
Point operator*(double s, const Point& p) { return {s * p.x, s * p.y}; }
double norm(const Point& p) { return std::hypot(p.x, p.y); }
double dist(const Point& a, const Point& b) { return norm(a - b); }

double Box::diameter() const { return std::hypot(x_hi - x_lo, y_hi - y_lo); }

bool Box::contains(const Point& p) const {
  return p.x >= x_lo && p.x <= x_hi && p.y >= y_lo && p.y <= y_hi;
}

Box Box::inflated(double pad) const {
  return {x_lo - pad, x_hi + pad, y_lo - pad, y_hi + pad};
}

Box bounding_box(const std::vector<Point>& pts) {
  Box b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : pts) {
    b.x_lo = std::min(b.x_lo, p.x);
    b.x_hi = std::max(b.x_hi, p.x);
    b.y_lo = std::min(b.y_lo, p.y);
    b.y_hi = std::max(b.y_hi, p.y);
  }
  return b;
}

static double dist_to_segment(const Point& p, const Point& a, const Point& b) {
  const Point d = b - a;
  const double len2 = d.x * d.x + d.y * d.y;
  if (len2 == 0.0) return dist(p, a);
  double t = ((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return dist(p, a + t * d);
}

double dist_to_polyline(const Point& p, const std::vector<Point>& poly) {
  double best = std::numeric_limits<double>::infinity();
  if (poly.size() == 1) return dist(p, poly.front());
  for (size_t i = 0; i + 1 < poly.size(); ++i)
    best = std::min(best, dist_to_segment(p, poly[i], poly[i + 1]));
  return best;
}

OrientedRectangle make_oriented_rectangle(std::string name,
                                          std::function<Point(double, double)> param,
                                          std::function<bool(const Point&)> contains,
                                          SideAxis side_axis, int side_samples) {
  OrientedRectangle r;
  r.name = std::move(name);
  r.param = std::move(param);
  r.contains = std::move(contains);
  r.side_axis = side_axis;
  const int n = std::max(2, side_samples);
  auto edge = [&](double u0, double v0, double du, double dv) {
    std::vector<Point> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
      const double s = static_cast<double>(i) / (n - 1);
      pts.push_back(r.param(u0 + s * du, v0 + s * dv));
    }
    return pts;
  };
  const auto u0 = edge(0, 0, 0, 1), u1 = edge(1, 0, 0, 1);
  const auto v0 = edge(0, 0, 1, 0), v1 = edge(0, 1, 1, 0);
  if (side_axis == SideAxis::U) {
    r.side_left = u0;
    r.side_right = u1;
    r.side_down = v0;
    r.side_up = v1;
  } else {
    r.side_left = v0;
    r.side_right = v1;
    r.side_down = u0;
    r.side_up = u1;
  }
  std::vector<Point> all;
  for (const auto* side : {&r.side_left, &r.side_right, &r.side_down, &r.side_up})
    all.insert(all.end(), side->begin(), side->end());
  // interior samples so that bulging patches get a fair bounding box
  for (int i = 1; i < 8; ++i)
    for (int j = 1; j < 8; ++j) all.push_back(r.param(i / 8.0, j / 8.0));
  r.bbox = bounding_box(all);
  return r;
}

OrientedRectangle make_rect_from_graphs(std::string name,
                                        std::function<double(double)> lower,
                                        std::function<double(double)> upper,
                                        double x_lo, double x_hi,
                                        SideAxis side_axis) {
  if (!(x_lo < x_hi)) throw std::invalid_argument("make_rect_from_graphs: empty x range");
  const int n = 1025;
  const double span = x_hi - x_lo;
  const double wtol = 1e-12 * std::max(1.0, span);
  int first_wide = -1, last_wide = -1;
  for (int i = 0; i < n; ++i) {
    const double x = x_lo + span * i / (n - 1);
    const double w = upper(x) - lower(x);
    if (w < -wtol)
      throw std::invalid_argument("make_rect_from_graphs: upper < lower at x=" + std::to_string(x));
    if (w > wtol) {
      if (first_wide < 0) first_wide = i;
      last_wide = i;
    }
  }
  if (first_wide < 0)
    throw std::invalid_argument("make_rect_from_graphs: strip is degenerate everywhere");
  if (first_wide > 1 && last_wide < n - 2)
    throw std::invalid_argument(
        "make_rect_from_graphs: strip collapses on intervals at both endpoints");
  auto param = [lower, upper, x_lo, span](double u, double v) -> Point {
    const double x = x_lo + u * span;
    const double lo = lower(x), hi = upper(x);
    return {x, lo + v * (hi - lo)};
  };
  auto contains = [lower, upper, x_lo, x_hi, wtol](const Point& p) -> bool {
    if (p.x < x_lo - wtol || p.x > x_hi + wtol) return false;
    const double x = std::clamp(p.x, x_lo, x_hi);
    return p.y >= lower(x) - wtol && p.y <= upper(x) + wtol;
  };
  return make_oriented_rectangle(std::move(name), param, contains, side_axis);
}

Point Path::at(double t) const {
  if (eval) return eval(t);
  if (points.empty()) throw std::logic_error("Path::at on empty path");
  if (t <= params.front()) return points.front();
  if (t >= params.back()) return points.back();
  const auto it = std::upper_bound(params.begin(), params.end(), t);
  const size_t i = static_cast<size_t>(it - params.begin());
  const double t0 = params[i - 1], t1 = params[i];
  const double s = (t1 > t0) ? (t - t0) / (t1 - t0) : 0.0;
  return points[i - 1] + s * (points[i] - points[i - 1]);
}

Path make_path(std::function<Point(double)> eval, int n_samples) {
  Path p;
  const int n = std::max(2, n_samples);
  p.params.reserve(n);
  p.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    p.params.push_back(t);
    p.points.push_back(eval(t));
  }
  p.eval = std::move(eval);
  return p;
}

std::vector<Path> sample_test_paths(const OrientedRectangle& rect, int n_paths,
                                    int n_samples, std::uint64_t seed) {
  if (n_paths < 1) throw std::invalid_argument("sample_test_paths: n_paths < 1");
  std::vector<Path> paths;
  paths.reserve(n_paths);
  const int n_fibers = std::min(n_paths, 5);
  // run the path parameter across the left/right pair, whichever
  // parameter axis carries it
  const auto raw = rect.param;
  const auto param = rect.side_axis == SideAxis::U
                         ? raw
                         : [raw](double u, double v) { return raw(v, u); };
  for (int k = 0; k < n_fibers; ++k) {
    const double v = (n_fibers == 1) ? 0.5 : static_cast<double>(k) / (n_fibers - 1);
    paths.push_back(make_path([param, v](double t) { return param(t, v); }, n_samples));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = n_fibers; k < n_paths; ++k) {
    const double c0 = unif(rng), c1 = unif(rng), c2 = unif(rng), c3 = unif(rng);
    auto bez = [c0, c1, c2, c3](double t) {
      const double s = 1.0 - t;
      return s * s * s * c0 + 3 * s * s * t * c1 + 3 * s * t * t * c2 + t * t * t * c3;
    };
    paths.push_back(
        make_path([param, bez](double t) { return param(t, bez(t)); }, n_samples));
  }
  return paths;
}

void write_path_csv(std::ostream& os, const Path& path) {
  os << "t,x,y\n";
  for (size_t i = 0; i < path.points.size(); ++i)
    os << fmt_double(path.params[i]) << ',' << fmt_double(path.points[i].x) << ','
       << fmt_double(path.points[i].y) << '\n';
}

void write_polyline_csv(std::ostream& os, const std::vector<Point>& pts) {
  os << "x,y\n";
  for (const auto& p : pts) os << fmt_double(p.x) << ',' << fmt_double(p.y) << '\n';
}

GridMask GridMask::empty(int w, int h) {
  GridMask m;
  m.width = w;
  m.height = h;
  m.cells.assign(static_cast<size_t>(w) * h, 0);
  return m;
}

namespace {

// BFS over cells selected by pred, seeded from seed_test cells, with the
// given connectivity; returns true if goal_test is reached.
template <typename Pred, typename Seed, typename Goal>
bool grid_reachable(int w, int h, bool eight, Pred pred, Seed seed, Goal goal) {
  std::vector<std::uint8_t> seen(static_cast<size_t>(w) * h, 0);
  std::deque<std::pair<int, int>> q;
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i)
      if (seed(i, j) && pred(i, j)) {
        seen[static_cast<size_t>(j) * w + i] = 1;
        q.emplace_back(i, j);
      }
  const int dx4[] = {1, -1, 0, 0}, dy4[] = {0, 0, 1, -1};
  const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1}, dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int* dx = eight ? dx8 : dx4;
  const int* dy = eight ? dy8 : dy4;
  const int nd = eight ? 8 : 4;
  while (!q.empty()) {
    auto [i, j] = q.front();
    q.pop_front();
    if (goal(i, j)) return true;
    for (int d = 0; d < nd; ++d) {
      const int ni = i + dx[d], nj = j + dy[d];
      if (ni < 0 || nj < 0 || ni >= w || nj >= h) continue;
      auto& s = seen[static_cast<size_t>(nj) * w + ni];
      if (!s && pred(ni, nj)) {
        s = 1;
        q.emplace_back(ni, nj);
      }
    }
  }
  return false;
}

}  // namespace

bool grid_cut_check(const GridMask& mask, CutDirection dir) {
  const int w = mask.width, h = mask.height;
  if (w == 0 || h == 0) return false;
  auto empty_cell = [&](int i, int j) { return !mask.at(i, j); };
  if (dir == CutDirection::LeftRight) {
    const bool corridor =
        grid_reachable(w, h, /*eight=*/true, empty_cell,
                       [&](int i, int) { return i == 0; },
                       [&](int i, int) { return i == w - 1; });
    return !corridor;
  }
  const bool corridor =
      grid_reachable(w, h, /*eight=*/true, empty_cell,
                     [&](int, int j) { return j == 0; },
                     [&](int, int j) { return j == h - 1; });
  return !corridor;
}

std::optional<std::vector<std::pair<int, int>>> grid_spanning_continuum(
    const GridMask& mask, CutDirection dir) {
  const int w = mask.width, h = mask.height;
  std::vector<std::uint8_t> seen(static_cast<size_t>(w) * h, 0);
  const int dx4[] = {1, -1, 0, 0}, dy4[] = {0, 0, 1, -1};
  for (int j0 = 0; j0 < h; ++j0) {
    for (int i0 = 0; i0 < w; ++i0) {
      if (!mask.at(i0, j0) || seen[static_cast<size_t>(j0) * w + i0]) continue;
      std::vector<std::pair<int, int>> comp;
      std::deque<std::pair<int, int>> q{{i0, j0}};
      seen[static_cast<size_t>(j0) * w + i0] = 1;
      bool touch_a = false, touch_b = false;
      while (!q.empty()) {
        auto [i, j] = q.front();
        q.pop_front();
        comp.emplace_back(i, j);
        if (dir == CutDirection::LeftRight) {
          touch_a |= (j == 0);
          touch_b |= (j == h - 1);
        } else {
          touch_a |= (i == 0);
          touch_b |= (i == w - 1);
        }
        for (int d = 0; d < 4; ++d) {
          const int ni = i + dx4[d], nj = j + dy4[d];
          if (ni < 0 || nj < 0 || ni >= w || nj >= h) continue;
          auto& s = seen[static_cast<size_t>(nj) * w + ni];
          if (!s && mask.at(ni, nj)) {
            s = 1;
            q.emplace_back(ni, nj);
          }
        }
      }
      if (touch_a && touch_b) return comp;
    }
  }
  return std::nullopt;
}

GridMask rasterize(const std::function<bool(const Point&)>& contains, const Box& box,
                   int w, int h) {
  GridMask m = GridMask::empty(w, h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      const Point c{box.x_lo + (box.x_hi - box.x_lo) * (i + 0.5) / w,
                    box.y_lo + (box.y_hi - box.y_lo) * (j + 0.5) / h};
      m.set(i, j, contains(c));
    }
  return m;
}

void write_pbm(std::ostream& os, const GridMask& mask) {
  os << "P1\n" << mask.width << ' ' << mask.height << '\n';
  for (int j = mask.height - 1; j >= 0; --j) {
    for (int i = 0; i < mask.width; ++i) {
      if (i) os << ' ';
      os << (mask.at(i, j) ? 1 : 0);
    }
    os << '\n';
  }
}

GridMask read_pbm(std::istream& is) {
  std::string magic;
  is >> magic;
  if (magic != "P1") throw std::runtime_error("read_pbm: expected P1 header");
  auto skip_comments = [&]() {
    while (is >> std::ws, is.peek() == '#') {
      std::string line;
      std::getline(is, line);
    }
  };
  skip_comments();
  int w = 0, h = 0;
  is >> w;
  skip_comments();
  is >> h;
  if (!is || w <= 0 || h <= 0) throw std::runtime_error("read_pbm: bad dimensions");
  GridMask m = GridMask::empty(w, h);
  for (int j = h - 1; j >= 0; --j)
    for (int i = 0; i < w; ++i) {
      int v = 0;
      skip_comments();
      is >> v;
      if (!is || (v != 0 && v != 1)) throw std::runtime_error("read_pbm: bad pixel");
      m.set(i, j, v == 1);
    }
  return m;
}

}  // namespace sc
