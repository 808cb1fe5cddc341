#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stretchchaos/geometry.hpp"
#include "stretchchaos/stretching.hpp"

namespace sc {

using VectorField = std::function<Point(const Point&)>;

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double h_init = 1e-3;
  long max_steps = 20000000;
};

struct IntegrationError : std::runtime_error {
  IntegrationError(const std::string& what, double t, Point y)
      : std::runtime_error(what), last_t(t), last_state(y) {}
  double last_t;
  Point last_state;
};

struct TrajectoryNode {
  double t = 0.0;
  Point y{};
};

// Dense record of an adaptive Dormand-Prince 5(4) run.  at(t) re-steps
// from the latest stored node before t, so queries share the accuracy of
// the original run.
struct Trajectory {
  std::vector<TrajectoryNode> nodes;
  VectorField field;
  IntegratorOptions opts;
  double t0() const { return nodes.front().t; }
  double t1() const { return nodes.back().t; }
  Point at(double t) const;
};

Trajectory integrate(const VectorField& field, Point z0, double t0, double t1,
                     const IntegratorOptions& opts = {});

// endpoint only, no storage
Point advance(const VectorField& field, Point z0, double dt,
              const IntegratorOptions& opts = {});

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::string& phase_id,
                          const std::function<double(const Point&)>& energy,
                          int n_rows = 1000);

// ---- conservative phases (autonomous pieces of the switched systems) ----

struct ConservativePhase {
  std::string id;
  VectorField field;
  std::function<double(const Point&)> energy;
  bool has_center = false;
  Point center{};
  double chi = 0.0;      // energy at the center
  int orientation = +1;  // +1 counterclockwise, -1 clockwise
};

struct VolterraParams {
  double a = 1.0, b = 1.0, c = 1.0, d = 1.0;
  double mu = 0.5;        // 0 < mu < a
  double r0 = 0.0, rmu = 0.0;  // phase durations, T = r0 + rmu
  double T() const { return r0 + rmu; }
};

struct DuffingParams {
  double k = 10.0, q = 4.0, s = 0.5;
  double rq = 0.0, rs = 0.0;
  double T() const { return rq + rs; }
};

// Volterra phase fields x' = x(a_eff - b y), y' = y(-c_eff + d x) with
// (a_eff, c_eff) = (a, c) for the free phase and (a - mu, c + mu) for the
// harvesting phase.  States with x or y below 1e-9 abort the integration.
ConservativePhase volterra_phase(const VolterraParams& p, bool harvesting);
ConservativePhase duffing_phase_q(const DuffingParams& p);
ConservativePhase duffing_phase_s(const DuffingParams& p);  // no closed orbits

double first_integral(const ConservativePhase& phase, const Point& z);

// Fundamental period of the closed orbit at the given energy level.
// The start point is located on the horizontal ray from the centre; the
// full-turn event is refined to 1e-10 in time.
double orbit_period(const ConservativePhase& phase, double level,
                    const IntegratorOptions& opts = {});

// Normalized angular displacement (theta(t) - theta(0)) / (2 pi) about
// the phase centre, angle unwrapped with per-step increments < pi.
double rotation_number(const ConservativePhase& phase, Point z, double t,
                       const IntegratorOptions& opts = {});

// Endpoint and unwrapped angle change in one pass (shared machinery of
// rotation_number and the twist-band construction).
struct AngleFlow {
  Point end{};
  double dtheta = 0.0;
};
AngleFlow flow_with_angle(const ConservativePhase& phase, Point z, double t,
                          const IntegratorOptions& opts = {});

// Smallest t at which the unwrapped angles of the two trajectories differ
// by gap_turns full turns (bisection after doubling; the closed-form
// threshold below is an upper bound for this).
double minimal_twist_time(const ConservativePhase& phase, Point z_inner, Point z_outer,
                          double gap_turns, double t_cap,
                          const IntegratorOptions& opts = {});

// alpha = (m1 + 3.5) tau01 tau02 / (tau02 - tau01), beta likewise.
std::pair<double, double> switching_thresholds(int m1, int m2, double tau01,
                                               double tau02, double taum1,
                                               double taum2);

// ---- switched systems and Poincare maps ----

struct SwitchingSystem {
  struct Phase {
    std::string id;
    VectorField field;
    double duration = 0.0;
  };
  std::vector<Phase> phases;
  double period() const;
};

SwitchingSystem volterra_switched(const VolterraParams& p);
SwitchingSystem duffing_switched(const DuffingParams& p);

// Full-period Poincare map (all phases); prefix n_phases < size gives the
// per-phase factor maps.
Point poincare(const SwitchingSystem& sys, Point z0, const IntegratorOptions& opts = {});
Point poincare_prefix(const SwitchingSystem& sys, Point z0, size_t n_phases,
                      const IntegratorOptions& opts = {});

void write_poincare_csv(std::ostream& os, const SwitchingSystem& sys, Point z0,
                        int n_iterates, const IntegratorOptions& opts = {});

// ---- linked annuli (Volterra) ----

struct LinkedAnnuli {
  bool linked = false;
  std::array<double, 8> order_x{};  // P2-, P1-, Q2-, Q1-, P1+, P2+, Q1+, Q2+
  std::optional<OrientedRectangle> r1;  // lower lens, sides on free-phase levels
  std::optional<OrientedRectangle> r2;  // upper lens, sides on harvesting levels
};

LinkedAnnuli linked_annuli(const VolterraParams& p, double l1, double l2, double h1,
                           double h2, const IntegratorOptions& opts = {});

// ---- Duffing mirror rectangles ----

// R1 in the third quadrant bounded by two E_q and two E_s level lines
// (closed-form in (E_q, E_s) coordinates for x <= 0), R2 its mirror image.
// R1 sides lie on the E_q levels, R2 sides on the E_s levels.
std::pair<OrientedRectangle, OrientedRectangle> duffing_linked_rects(
    const DuffingParams& p, double eq1, double eq2, double es1, double es2);

// ---- fixed points of two-phase compositions ----

// Fixed point of psi o phi when phi preserves e1 and psi preserves e2.
// Then psi(phi(z)) = z forces f1 = e2(phi(z)) - e2(z) and
// f2 = e1(psi(phi(z))) - e1(z) to vanish, two smooth O(1) residuals even
// when the composition itself is violently hyperbolic.  From the seed the
// zero curve of f1 is traced (predictor along the curve, 1d Newton
// corrector) in both directions until f2 changes sign, then the crossing
// is bisected along the curve.  Candidates are returned unverified; the
// caller should check the direct residual |psi(phi(z)) - z|, since the
// energy pair only pins z down to a level-curve intersection.
std::vector<Point> switched_fixed_point_candidates(
    const PlanarMap& phi, const PlanarMap& psi,
    const std::function<double(const Point&)>& e1,
    const std::function<double(const Point&)>& e2, Point seed,
    double curve_step, double f_tol = 1e-10, int max_trace_steps = 400);

// ---- memoized planar map over a flow (endpoint + angle) ----

// Wraps an expensive evaluation z -> (endpoint, unwrapped angle change);
// repeated queries at identical coordinates hit a thread-safe cache, so
// region predicates, maps, and band classifiers can share integrations.
class CachedFlowMap {
 public:
  explicit CachedFlowMap(std::function<AngleFlow(const Point&)> eval)
      : eval_(std::move(eval)) {}
  AngleFlow get(const Point& z) const;
  PlanarMap as_map() const;
  std::function<double(const Point&)> angle_about(Point center) const;
  size_t cache_size() const;

 private:
  std::function<AngleFlow(const Point&)> eval_;
  mutable std::unordered_map<std::uint64_t, std::vector<std::pair<Point, AngleFlow>>> cache_;
  mutable std::mutex mu_;
};

}  // namespace sc
