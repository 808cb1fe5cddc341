#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stretchchaos/geometry.hpp"
#include "stretchchaos/stretching.hpp"

namespace sc {

// ---- parameter records ----

struct LogisticParams {
  double mu = 4.0;
};

struct Olg1dParams {
  double mu = 80.0;
};

// Planar overlapping-generations map F(x,y) = (g(x) - y/b, g(x)) with
// g(x) = (mu x e^{-x})^{1/beta}; peak of g at x_bar = 1, M = g(x_bar).
struct Olg2dParams {
  double mu = 80.0;
  double b = 2.0;
  double beta = 1.3;
  double x_bar() const { return 1.0; }
  double g(double x) const;
  double M() const { return g(x_bar()); }
};

struct DuopolyParams {
  double a = 10.0, b = 0.5, c1 = 3.0, c2 = 5.0;
  double alpha = 26.0 / 27.0;
  double nu = 0.5;
  double P() const { return (a + c1 - 2 * c2 - 1 / alpha) / (3 * b); }
  double Q() const { return (a - c2) / (2 * b); }
  double right_edge_x(double y) const { return (a - c1 + 1 / alpha) / (2 * b) - y / 2; }
  double mid_segment_x(double y) const { return (a - c1 + 1 / alpha) / (4 * b) - y / 4; }
};

// Two overlapping annuli of radii [p1,p2] about (-r,0) and [q1,q2] about
// (r,0); phi twists about the left centre, psi about the right one.
struct Twist1Params {
  double r = 3.0;
  double p1 = 3.3, p2 = 6.0, q1 = 3.3, q2 = 6.0;
  double c1 = -1.5, d1 = 3.3, c2 = 0.0, d2 = 0.9;
};

// Annulus p1 <= |z| <= p2 about the origin crossed with the horizontal
// strip q1 <= y <= q2; phi twists the annulus, psi shears the strip.
struct Twist2Params {
  double p1 = 3.0, p2 = 5.0, q1 = -1.0, q2 = 2.0;
  double c1 = 0.4 * 3.14159265358979323846;
  double d1 = 3.0 * 3.14159265358979323846;
  double c2 = 1.0, d2 = 8.6;
};

// Piecewise-linear interval map with a fixed point in [a,b] but no
// fixed point in [0,a] u [b,1]; the standard negative control.
struct CounterexampleParams {
  double a = 0.3, b = 0.6, c = 0.2, d = 0.8;
};

// ---- evaluation ----

double eval_logistic(const LogisticParams& p, double x);
double eval_olg1d(const Olg1dParams& p, double x);
Point eval_olg2d(const Olg2dParams& p, const Point& z);
Point eval_duopoly(const DuopolyParams& p, const Point& z);
Point eval_twist1_phi(const Twist1Params& p, const Point& z);
Point eval_twist1_psi(const Twist1Params& p, const Point& z);
Point eval_twist2_phi(const Twist2Params& p, const Point& z);
Point eval_twist2_psi(const Twist2Params& p, const Point& z);
double eval_counterexample(const CounterexampleParams& p, double s);

// ---- condition reports ----

struct Condition {
  std::string name;
  double lhs = 0.0, rhs = 0.0;
  std::string relation;  // "<", "<=", ">", ">="
  double margin = 0.0;   // signed; positive means satisfied with room
  bool strict = false;
  bool holds = false;
};

enum class Overall { HoldsStrict, Boundary, Fails };
const char* overall_name(Overall o);

struct ConditionReport {
  std::vector<Condition> conditions;
  Overall overall = Overall::Fails;
  nlohmann::json to_json() const;
};

ConditionReport olg_conditions(const Olg2dParams& p, double K);
ConditionReport duopoly_conditions(const DuopolyParams& p);

// ---- geometry builders ----

struct OlgGeometry {
  OrientedRectangle rect;
  RegionPredicate r0, r1;
};

OlgGeometry olg_geometry(const Olg2dParams& p, double K);

// Region of the alternative construction: x <= y <= nu x + d under the
// curve y = b g(x).  Construction only; no admissibility theorem applies.
OrientedRectangle olg_alternative_region(const Olg2dParams& p, double nu, double d);

struct DuopolyGeometry {
  OrientedRectangle rect;
  RegionPredicate r0, r1;
  std::function<Point(double)> segment;  // separating segment, y in [P,Q]
};

DuopolyGeometry duopoly_geometry(const DuopolyParams& p);

struct TwistGeometry {
  OrientedRectangle rectA, rectB;
  std::string description;
};

TwistGeometry twist_geometry_1(const Twist1Params& p);
TwistGeometry twist_geometry_2(const Twist2Params& p);

// Disjoint compact angular bands H_i of rectA on which the twist crosses
// rectB; built by scanning the unwrapped image angle over rectA.
std::vector<RegionPredicate> twist_bands(const PlanarMap& phi,
                                         const OrientedRectangle& rectA,
                                         const OrientedRectangle& rectB,
                                         const std::function<double(const Point&)>& image_angle,
                                         int m_expected, int scan_grid = 96);

// ---- flat key-value config files: "model <name>" plus "key value" lines ----

struct ModelConfig {
  std::string model;
  std::map<std::string, double> values;
  double get(const std::string& key, double fallback) const;
};

ModelConfig read_model_config(std::istream& is);

}  // namespace sc
