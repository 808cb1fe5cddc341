#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sc {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

Point operator+(const Point& a, const Point& b);
Point operator-(const Point& a, const Point& b);
Point operator*(double s, const Point& p);
double dist(const Point& a, const Point& b);
double norm(const Point& p);

struct Box {
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  double diameter() const;
  bool contains(const Point& p) const;
  Box inflated(double pad) const;
};

Box bounding_box(const std::vector<Point>& pts);

// Region given by a membership predicate; label is used in reports.
// bbox bounds the region (used for seeding searches and fast rejection).
struct RegionPredicate {
  std::string label;
  std::function<bool(const Point&)> contains;
  Box bbox;
};

// A compact planar set homeomorphic to the unit square, with a
// distinguished pair of opposite boundary arcs playing the role of the
// "left" and "right" sides.  param maps [0,1]^2 onto the set, contains
// is exact membership, and the four side polylines are sampled images
// of the square's edges under param.
enum class SideAxis { U, V };  // which parameter edges are left/right

struct OrientedRectangle {
  std::string name;
  std::function<Point(double, double)> param;
  std::function<bool(const Point&)> contains;
  Box bbox;
  SideAxis side_axis = SideAxis::U;  // parameter edges carrying left/right
  std::vector<Point> side_left, side_right, side_down, side_up;
  double diameter() const { return bbox.diameter(); }
};

// Builds an oriented rectangle from param + contains, sampling the side
// polylines.  side_axis selects which pair of parameter edges becomes
// left/right; the other pair becomes down/up.
OrientedRectangle make_oriented_rectangle(std::string name,
                                          std::function<Point(double, double)> param,
                                          std::function<bool(const Point&)> contains,
                                          SideAxis side_axis = SideAxis::U,
                                          int side_samples = 2049);

// Region between two graphs y = lower(x) and y = upper(x) over [x_lo, x_hi].
// With SideAxis::U the vertical segments at x_lo / x_hi are left / right.
// Throws std::invalid_argument if upper < lower somewhere, or if the strip
// collapses on a subinterval of positive length at both endpoints.
OrientedRectangle make_rect_from_graphs(std::string name,
                                        std::function<double(double)> lower,
                                        std::function<double(double)> upper,
                                        double x_lo, double x_hi,
                                        SideAxis side_axis = SideAxis::U);

// A sampled path, optionally with a continuous evaluator for refinement.
struct Path {
  std::vector<double> params;  // increasing, in [0,1]
  std::vector<Point> points;
  std::function<Point(double)> eval;  // may be empty; then linear interp
  Point at(double t) const;           // uses eval when available
  size_t size() const { return points.size(); }
};

Path make_path(std::function<Point(double)> eval, int n_samples);

// Deterministic family of test paths joining side_left to side_right of
// the rectangle: horizontal parameter fibers (including the v=0 and v=1
// boundary arcs) plus seeded random monotone-in-u Bezier perturbations.
std::vector<Path> sample_test_paths(const OrientedRectangle& rect,
                                    int n_paths, int n_samples,
                                    std::uint64_t seed);

void write_path_csv(std::ostream& os, const Path& path);
void write_polyline_csv(std::ostream& os, const std::vector<Point>& pts);

// ---- grid masks and the discrete crossing check ----

struct GridMask {
  int width = 0, height = 0;
  std::vector<std::uint8_t> cells;  // row-major, row 0 = bottom
  bool at(int i, int j) const { return cells[static_cast<size_t>(j) * width + i] != 0; }
  void set(int i, int j, bool v) { cells[static_cast<size_t>(j) * width + i] = v ? 1 : 0; }
  static GridMask empty(int w, int h);
};

enum class CutDirection { LeftRight, DownUp };

// True when the occupied cells separate the two opposite sides: no
// 8-connected corridor of empty cells joins them.
bool grid_cut_check(const GridMask& mask, CutDirection dir);

// 4-connected occupied component spanning the two sides orthogonal to
// dir (for LeftRight: touching both the bottom and the top row).
std::optional<std::vector<std::pair<int, int>>> grid_spanning_continuum(
    const GridMask& mask, CutDirection dir);

// Rasterize a region over a box into a w x h mask (cell centre sampling).
GridMask rasterize(const std::function<bool(const Point&)>& contains,
                   const Box& box, int w, int h);

// Plain PBM (P1): 1 = occupied.  Row order in the file is top to bottom.
void write_pbm(std::ostream& os, const GridMask& mask);
GridMask read_pbm(std::istream& is);

double dist_to_polyline(const Point& p, const std::vector<Point>& poly);

}  // namespace sc
