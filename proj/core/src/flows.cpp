#include "stretchchaos/flows.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>
#include <stdexcept>

#include "stretchchaos/report.hpp"

namespace sc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Dormand-Prince 5(4) tableau.
constexpr double kC[6] = {1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                 kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33,
                 kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
                 kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
constexpr double kE1 = 35.0 / 384 - 5179.0 / 57600,
                 kE3 = 500.0 / 1113 - 7571.0 / 16695,
                 kE4 = 125.0 / 192 - 393.0 / 640,
                 kE5 = -2187.0 / 6784 + 92097.0 / 339200,
                 kE6 = 11.0 / 84 - 187.0 / 2100, kE7 = -1.0 / 40;

struct StepResult {
  Point y;          // 5th order solution
  Point fy;         // field at y (FSAL stage)
  double err;       // scaled error norm
  Point mids[4];    // interior stage states at c = 0.2, 0.3, 0.8, 8/9
};

StepResult rk_step(const VectorField& f, const Point& y, const Point& f1, double h,
                   const IntegratorOptions& opts) {
  auto st = [&](double ax, double ay) { return Point{y.x + h * ax, y.y + h * ay}; };
  const Point k1 = f1;
  const Point y2 = st(kA21 * k1.x, kA21 * k1.y);
  const Point k2 = f(y2);
  const Point y3 = st(kA31 * k1.x + kA32 * k2.x, kA31 * k1.y + kA32 * k2.y);
  const Point k3 = f(y3);
  const Point y4 = st(kA41 * k1.x + kA42 * k2.x + kA43 * k3.x,
                      kA41 * k1.y + kA42 * k2.y + kA43 * k3.y);
  const Point k4 = f(y4);
  const Point y5 = st(kA51 * k1.x + kA52 * k2.x + kA53 * k3.x + kA54 * k4.x,
                      kA51 * k1.y + kA52 * k2.y + kA53 * k3.y + kA54 * k4.y);
  const Point k5 = f(y5);
  const Point y6 = st(kA61 * k1.x + kA62 * k2.x + kA63 * k3.x + kA64 * k4.x + kA65 * k5.x,
                      kA61 * k1.y + kA62 * k2.y + kA63 * k3.y + kA64 * k4.y + kA65 * k5.y);
  const Point k6 = f(y6);
  StepResult out;
  out.y = st(kB1 * k1.x + kB3 * k3.x + kB4 * k4.x + kB5 * k5.x + kB6 * k6.x,
             kB1 * k1.y + kB3 * k3.y + kB4 * k4.y + kB5 * k5.y + kB6 * k6.y);
  out.fy = f(out.y);
  const double ex =
      h * (kE1 * k1.x + kE3 * k3.x + kE4 * k4.x + kE5 * k5.x + kE6 * k6.x + kE7 * out.fy.x);
  const double ey =
      h * (kE1 * k1.y + kE3 * k3.y + kE4 * k4.y + kE5 * k5.y + kE6 * k6.y + kE7 * out.fy.y);
  const double sx = opts.abs_tol + opts.rel_tol * std::max(std::abs(y.x), std::abs(out.y.x));
  const double sy = opts.abs_tol + opts.rel_tol * std::max(std::abs(y.y), std::abs(out.y.y));
  out.err = std::sqrt(0.5 * ((ex / sx) * (ex / sx) + (ey / sy) * (ey / sy)));
  out.mids[0] = y2;
  out.mids[1] = y3;
  out.mids[2] = y4;
  out.mids[3] = y5;
  return out;
}

double wrap_pi(double a) {
  while (a > kPi) a -= 2 * kPi;
  while (a < -kPi) a += 2 * kPi;
  return a;
}

double angle_of(const Point& z, const Point& c) { return std::atan2(z.y - c.y, z.x - c.x); }

// Angle increment across one accepted step, chained through the interior
// stage states so every raw increment stays well below pi.  Returns nullopt
// when an increment is too large to unwrap safely (caller halves the step).
std::optional<double> step_dtheta(const Point& c, const Point& y0, const StepResult& s) {
  const Point chain[6] = {s.mids[0], s.mids[1], s.mids[2], s.mids[3], s.y, s.y};
  double total = 0.0;
  double prev = angle_of(y0, c);
  for (int i = 0; i < 5; ++i) {
    const double cur = angle_of(chain[i], c);
    const double inc = wrap_pi(cur - prev);
    if (std::abs(inc) > 1.2) return std::nullopt;
    total += inc;
    prev = cur;
  }
  return total;
}

struct RunConfig {
  bool store = false;                 // record trajectory nodes
  const Point* angle_center = nullptr;  // track unwrapped angle about this point
  double theta_target = 0.0;          // stop when |dtheta| reaches this (0 = never)
};

struct RunResult {
  Point end{};
  double t_end = 0.0;
  double dtheta = 0.0;
  bool hit_target = false;
  std::vector<TrajectoryNode> nodes;
};

RunResult run_flow(const VectorField& field, Point z0, double t0, double t_max,
                   const IntegratorOptions& opts, const RunConfig& cfg) {
  RunResult res;
  double t = t0;
  Point y = z0;
  Point fy = field(y);
  double h = std::min(opts.h_init, std::max(1e-14, t_max - t0));
  double theta = 0.0;
  if (cfg.store) res.nodes.push_back({t, y});
  long steps = 0;
  while (t < t_max - 1e-14 * std::max(1.0, std::abs(t_max))) {
    if (++steps > opts.max_steps)
      throw IntegrationError("step budget exhausted", t, y);
    h = std::min(h, t_max - t);
    StepResult s = rk_step(field, y, fy, h, opts);
    if (s.err > 1.0) {
      h *= std::max(0.1, 0.9 * std::pow(s.err, -0.2));
      continue;
    }
    std::optional<double> dth;
    if (cfg.angle_center) {
      dth = step_dtheta(*cfg.angle_center, y, s);
      if (!dth) {
        h *= 0.5;
        if (h < 1e-15) throw IntegrationError("angle unwrap stalled", t, y);
        continue;
      }
    }
    if (cfg.angle_center && cfg.theta_target > 0.0 &&
        std::abs(theta + *dth) >= cfg.theta_target) {
      // refine the stopping time within this step by bisection on the
      // step fraction; partial rotations inside one step are < pi.
      const double base = angle_of(y, *cfg.angle_center);
      double lo = 0.0, hi = 1.0;
      Point zhi = s.y;
      for (int it = 0; it < 80 && (hi - lo) * h > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Point zm = advance(field, y, mid * h, opts);
        const double inc = wrap_pi(angle_of(zm, *cfg.angle_center) - base);
        if (std::abs(theta + inc) >= cfg.theta_target) {
          hi = mid;
          zhi = zm;
        } else {
          lo = mid;
        }
      }
      res.end = zhi;
      res.t_end = t + hi * h;
      res.dtheta = theta + wrap_pi(angle_of(zhi, *cfg.angle_center) - base);
      res.hit_target = true;
      if (cfg.store) res.nodes.push_back({res.t_end, res.end});
      return res;
    }
    t += h;
    y = s.y;
    fy = s.fy;
    if (cfg.angle_center) theta += *dth;
    if (cfg.store) res.nodes.push_back({t, y});
    h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(s.err, 1e-10), -0.2)));
  }
  res.end = y;
  res.t_end = t;
  res.dtheta = theta;
  return res;
}

}  // namespace

Point advance(const VectorField& field, Point z0, double dt, const IntegratorOptions& opts) {
  if (dt <= 0.0) return z0;
  return run_flow(field, z0, 0.0, dt, opts, {}).end;
}

Trajectory integrate(const VectorField& field, Point z0, double t0, double t1,
                     const IntegratorOptions& opts) {
  Trajectory traj;
  traj.field = field;
  traj.opts = opts;
  RunConfig cfg;
  cfg.store = true;
  traj.nodes = run_flow(field, z0, t0, t1, opts, cfg).nodes;
  return traj;
}

Point Trajectory::at(double t) const {
  if (nodes.empty()) throw std::runtime_error("empty trajectory");
  if (t <= nodes.front().t) return nodes.front().y;
  if (t >= nodes.back().t) return nodes.back().y;
  auto it = std::upper_bound(nodes.begin(), nodes.end(), t,
                             [](double v, const TrajectoryNode& n) { return v < n.t; });
  const TrajectoryNode& base = *std::prev(it);
  return advance(field, base.y, t - base.t, opts);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::string& phase_id,
                          const std::function<double(const Point&)>& energy,
                          int n_rows) {
  os << "t,x,y,phase,energy\n";
  const size_t n = traj.nodes.size();
  const size_t stride = std::max<size_t>(1, n / static_cast<size_t>(std::max(1, n_rows)));
  for (size_t i = 0; i < n; i += stride) {
    const auto& nd = traj.nodes[i];
    os << fmt_double(nd.t) << ',' << fmt_double(nd.y.x) << ',' << fmt_double(nd.y.y) << ','
       << phase_id << ',' << (energy ? fmt_double(energy(nd.y)) : std::string("nan")) << '\n';
  }
  const auto& nd = traj.nodes.back();
  os << fmt_double(nd.t) << ',' << fmt_double(nd.y.x) << ',' << fmt_double(nd.y.y) << ','
     << phase_id << ',' << (energy ? fmt_double(energy(nd.y)) : std::string("nan")) << '\n';
}

// ---- phases ----

ConservativePhase volterra_phase(const VolterraParams& p, bool harvesting) {
  const double ae = harvesting ? p.a - p.mu : p.a;
  const double ce = harvesting ? p.c + p.mu : p.c;
  if (ae <= 0.0) throw std::invalid_argument("harvesting rate must stay below the prey growth rate");
  const double b = p.b, d = p.d;
  ConservativePhase ph;
  ph.id = harvesting ? "harvesting" : "free";
  ph.field = [ae, ce, b, d](const Point& z) {
    if (z.x < 1e-9 || z.y < 1e-9)
      throw IntegrationError("population left the open positive quadrant", 0.0, z);
    return Point{z.x * (ae - b * z.y), z.y * (-ce + d * z.x)};
  };
  ph.energy = [ae, ce, b, d](const Point& z) {
    if (z.x <= 0.0 || z.y <= 0.0)
      throw std::domain_error("energy is defined on the open positive quadrant");
    return d * z.x - ce * std::log(z.x) + b * z.y - ae * std::log(z.y);
  };
  ph.has_center = true;
  ph.center = Point{ce / d, ae / b};
  ph.chi = ph.energy(ph.center);
  ph.orientation = +1;
  return ph;
}

ConservativePhase duffing_phase_q(const DuffingParams& p) {
  const double k = p.k, q = p.q;
  ConservativePhase ph;
  ph.id = "forward";
  ph.field = [k, q](const Point& z) {
    return Point{z.y, -k * std::max(0.0, z.x) + q};
  };
  ph.energy = [k, q](const Point& z) {
    const double xp = std::max(0.0, z.x);
    return 0.5 * z.y * z.y + 0.5 * k * xp * xp - q * z.x;
  };
  ph.has_center = true;
  ph.center = Point{q / k, 0.0};
  ph.chi = -0.5 * q * q / k;
  ph.orientation = -1;
  return ph;
}

ConservativePhase duffing_phase_s(const DuffingParams& p) {
  const double k = p.k, s = p.s;
  ConservativePhase ph;
  ph.id = "backward";
  ph.field = [k, s](const Point& z) {
    return Point{z.y, -k * std::max(0.0, z.x) - s};
  };
  ph.energy = [k, s](const Point& z) {
    const double xp = std::max(0.0, z.x);
    return 0.5 * z.y * z.y + 0.5 * k * xp * xp + s * z.x;
  };
  ph.has_center = false;
  ph.orientation = -1;
  return ph;
}

double first_integral(const ConservativePhase& phase, const Point& z) {
  return phase.energy(z);
}

namespace {

// Point on the rightward horizontal ray from the centre with the given
// energy (energy is increasing along the ray above the centre value).
Point ray_point(const ConservativePhase& phase, double level) {
  if (!phase.has_center) throw std::invalid_argument("phase has no centre");
  if (!(level > phase.chi))
    throw std::invalid_argument("level must exceed the centre energy");
  const Point c = phase.center;
  double step = std::max(1e-6, 1e-3 * std::max(1.0, std::abs(c.x)));
  double lo = 0.0, hi = step;
  auto e = [&](double r) { return phase.energy(Point{c.x + r, c.y}); };
  int guard = 0;
  while (e(hi) < level) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 200) throw std::runtime_error("energy level not reached on the ray");
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-16 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (e(mid) < level ? lo : hi) = mid;
  }
  return Point{c.x + 0.5 * (lo + hi), c.y};
}

RunResult full_turn(const ConservativePhase& phase, Point start, const IntegratorOptions& opts,
                    bool store) {
  RunConfig cfg;
  cfg.store = store;
  cfg.angle_center = &phase.center;
  cfg.theta_target = 2 * kPi;
  // Generous time cap; closed orbits of interest have bounded periods.
  RunResult r = run_flow(phase.field, start, 0.0, 1e7, opts, cfg);
  if (!r.hit_target) throw std::runtime_error("orbit did not close within the time cap");
  return r;
}

}  // namespace

double orbit_period(const ConservativePhase& phase, double level,
                    const IntegratorOptions& opts) {
  return full_turn(phase, ray_point(phase, level), opts, false).t_end;
}

AngleFlow flow_with_angle(const ConservativePhase& phase, Point z, double t,
                          const IntegratorOptions& opts) {
  if (!phase.has_center) throw std::invalid_argument("phase has no centre");
  const double r = std::hypot(z.x - phase.center.x, z.y - phase.center.y);
  if (r < 1e-12)
    throw IntegrationError("point is at the rotation centre", 0.0, z);
  RunConfig cfg;
  cfg.angle_center = &phase.center;
  RunResult res = run_flow(phase.field, z, 0.0, t, opts, cfg);
  return AngleFlow{res.end, res.dtheta};
}

double rotation_number(const ConservativePhase& phase, Point z, double t,
                       const IntegratorOptions& opts) {
  return flow_with_angle(phase, z, t, opts).dtheta / (2 * kPi);
}

double minimal_twist_time(const ConservativePhase& phase, Point z_inner, Point z_outer,
                          double gap_turns, double t_cap, const IntegratorOptions& opts) {
  auto gap = [&](double t) {
    return std::abs(rotation_number(phase, z_inner, t, opts) -
                    rotation_number(phase, z_outer, t, opts));
  };
  double lo = 0.0, hi = std::min(1.0, t_cap);
  while (gap(hi) < gap_turns) {
    lo = hi;
    hi *= 2.0;
    if (hi > t_cap) throw std::runtime_error("twist gap not reached within the time cap");
  }
  for (int i = 0; i < 40 && (hi - lo) > 1e-6 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < gap_turns ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::pair<double, double> switching_thresholds(int m1, int m2, double tau01, double tau02,
                                               double taum1, double taum2) {
  const double d0 = std::max(tau01, tau02) - std::min(tau01, tau02);
  const double dm = std::max(taum1, taum2) - std::min(taum1, taum2);
  if (d0 <= 0.0 || dm <= 0.0)
    throw std::invalid_argument("equal orbit periods admit no twist threshold");
  const double alpha = (m1 + 3.5) * tau01 * tau02 / d0;
  const double beta = (m2 + 3.5) * taum1 * taum2 / dm;
  return {alpha, beta};
}

// ---- switched systems ----

double SwitchingSystem::period() const {
  double t = 0.0;
  for (const auto& ph : phases) t += ph.duration;
  return t;
}

SwitchingSystem volterra_switched(const VolterraParams& p) {
  SwitchingSystem sys;
  const auto free_ph = volterra_phase(p, false);
  const auto harv_ph = volterra_phase(p, true);
  sys.phases.push_back({free_ph.id, free_ph.field, p.r0});
  sys.phases.push_back({harv_ph.id, harv_ph.field, p.rmu});
  return sys;
}

SwitchingSystem duffing_switched(const DuffingParams& p) {
  SwitchingSystem sys;
  const auto fq = duffing_phase_q(p);
  const auto fs = duffing_phase_s(p);
  sys.phases.push_back({fq.id, fq.field, p.rq});
  sys.phases.push_back({fs.id, fs.field, p.rs});
  return sys;
}

Point poincare_prefix(const SwitchingSystem& sys, Point z0, size_t n_phases,
                      const IntegratorOptions& opts) {
  Point z = z0;
  for (size_t i = 0; i < n_phases && i < sys.phases.size(); ++i)
    z = advance(sys.phases[i].field, z, sys.phases[i].duration, opts);
  return z;
}

Point poincare(const SwitchingSystem& sys, Point z0, const IntegratorOptions& opts) {
  return poincare_prefix(sys, z0, sys.phases.size(), opts);
}

void write_poincare_csv(std::ostream& os, const SwitchingSystem& sys, Point z0,
                        int n_iterates, const IntegratorOptions& opts) {
  os << "n,x,y\n";
  Point z = z0;
  os << 0 << ',' << fmt_double(z.x) << ',' << fmt_double(z.y) << '\n';
  for (int n = 1; n <= n_iterates; ++n) {
    try {
      z = poincare(sys, z, opts);
    } catch (const std::exception&) {
      break;  // orbit left the domain (expected when z0 sits on a saddle)
    }
    os << n << ',' << fmt_double(z.x) << ',' << fmt_double(z.y) << '\n';
  }
}

// ---- linked annuli ----

namespace {

struct Polyline {
  std::vector<Point> pts;
  Point eval(double s) const {
    const double u = std::clamp(s, 0.0, 1.0) * (pts.size() - 1);
    const size_t i = std::min(pts.size() - 2, static_cast<size_t>(u));
    const double f = u - static_cast<double>(i);
    return Point{pts[i].x + f * (pts[i + 1].x - pts[i].x),
                 pts[i].y + f * (pts[i + 1].y - pts[i].y)};
  }
  Point front() const { return pts.front(); }
  Point back() const { return pts.back(); }
  void reverse() { std::reverse(pts.begin(), pts.end()); }
};

double dist2(const Point& a, const Point& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Both roots of the (unimodal along the reference line) energy restriction
// e(x) = level, bracketing on each side of the minimising abscissa.
std::pair<double, double> line_roots(const std::function<double(double)>& e, double x_min,
                                     double x_lo_cap, double x_hi_cap, double level) {
  auto bisect = [&](double lo, double hi, bool increasing) {
    for (int i = 0; i < 200 && (hi - lo) > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
      const double mid = 0.5 * (lo + hi);
      const bool below = e(mid) < level;
      if (below == increasing)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  };
  if (!(e(x_min) < level)) throw std::runtime_error("energy level does not cut the reference line");
  double lo = x_min, step = 0.5 * (x_min - x_lo_cap);
  while (e(x_min - step) < level && step < (x_min - x_lo_cap) * 0.999) step = std::min(step * 1.5, (x_min - x_lo_cap) * 0.999);
  if (e(x_min - step) < level) throw std::runtime_error("energy level does not cut the reference line on the left");
  const double xl = bisect(x_min - step, x_min, false);
  step = 0.5 * (x_hi_cap - x_min);
  while (e(x_min + step) < level && step < (x_hi_cap - x_min) * 0.999) step = std::min(step * 1.5, (x_hi_cap - x_min) * 0.999);
  if (e(x_min + step) < level) throw std::runtime_error("energy level does not cut the reference line on the right");
  const double xr = bisect(x_min, x_min + step, true);
  (void)lo;
  return {xl, xr};
}

struct LevelLoop {
  Trajectory traj;
  double period = 0.0;
};

LevelLoop closed_loop(const ConservativePhase& phase, Point start, const IntegratorOptions& opts) {
  RunResult r = full_turn(phase, start, opts, true);
  LevelLoop loop;
  loop.period = r.t_end;
  loop.traj.field = phase.field;
  loop.traj.opts = opts;
  loop.traj.nodes = std::move(r.nodes);
  return loop;
}

// Times along the loop where g(z(t)) = 0, refined by bisection with re-stepping.
std::vector<double> loop_crossings(const LevelLoop& loop, const std::function<double(const Point&)>& g) {
  std::vector<double> out;
  const auto& nd = loop.traj.nodes;
  for (size_t i = 0; i + 1 < nd.size(); ++i) {
    const double ga = g(nd[i].y), gb = g(nd[i + 1].y);
    if (ga == 0.0) {
      out.push_back(nd[i].t);
      continue;
    }
    if ((ga < 0.0) == (gb < 0.0)) continue;
    double lo = nd[i].t, hi = nd[i + 1].t;
    for (int it = 0; it < 80 && (hi - lo) > 1e-13 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double gm = g(loop.traj.at(mid));
      if ((gm < 0.0) == (ga < 0.0))
        lo = mid;
      else
        hi = mid;
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

// Arc of the loop between two crossing times whose interior satisfies the
// membership predicate (the complementary window runs around the far side).
Polyline loop_arc(const LevelLoop& loop, double ta, double tb,
                  const std::function<bool(const Point&)>& inside, int n_samples) {
  auto window_ok = [&](double wa, double wb) {
    for (int i = 1; i < 8; ++i) {
      const double t = wa + (wb - wa) * i / 8.0;
      if (!inside(loop.traj.at(t > loop.period ? t - loop.period : t))) return false;
    }
    return true;
  };
  double wa = std::min(ta, tb), wb = std::max(ta, tb);
  if (!window_ok(wa, wb)) {
    const double na = wb, nb = wa + loop.period;
    if (!window_ok(na, nb)) throw std::runtime_error("no admissible arc between the crossings");
    wa = na;
    wb = nb;
  }
  Polyline arc;
  arc.pts.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    double t = wa + (wb - wa) * i / (n_samples - 1);
    if (t > loop.period) t -= loop.period;
    arc.pts.push_back(loop.traj.at(t));
  }
  return arc;
}

OrientedRectangle coons_rectangle(const std::string& name, Polyline left, Polyline right,
                                  Polyline down, Polyline up,
                                  std::function<bool(const Point&)> contains, SideAxis axis) {
  // corners: c00 = (u=0,v=0) etc.; orient arcs to run with increasing u/v.
  // down's origin must be the corner it shares with left, so pick the
  // closest endpoint pairing between the two arcs before fixing the rest.
  {
    const double ff = dist2(down.front(), left.front()), fb = dist2(down.front(), left.back());
    const double bf = dist2(down.back(), left.front()), bb = dist2(down.back(), left.back());
    if (std::min(bf, bb) < std::min(ff, fb)) down.reverse();
  }
  const Point c00 = down.front(), c10 = down.back();
  if (dist2(left.front(), c00) > dist2(left.back(), c00)) left.reverse();
  if (dist2(right.front(), c10) > dist2(right.back(), c10)) right.reverse();
  if (dist2(up.front(), left.back()) > dist2(up.back(), left.back())) up.reverse();
  const Point c01 = left.back(), c11 = right.back();
  auto param = [left, right, down, up, c00, c10, c01, c11](double u, double v) {
    const Point D = down.eval(u), U = up.eval(u), L = left.eval(v), R = right.eval(v);
    return Point{(1 - v) * D.x + v * U.x + (1 - u) * L.x + u * R.x -
                     ((1 - u) * (1 - v) * c00.x + u * (1 - v) * c10.x + (1 - u) * v * c01.x +
                      u * v * c11.x),
                 (1 - v) * D.y + v * U.y + (1 - u) * L.y + u * R.y -
                     ((1 - u) * (1 - v) * c00.y + u * (1 - v) * c10.y + (1 - u) * v * c01.y +
                      u * v * c11.y)};
  };
  return make_oriented_rectangle(name, param, std::move(contains), axis);
}

}  // namespace

LinkedAnnuli linked_annuli(const VolterraParams& p, double l1, double l2, double h1, double h2,
                           const IntegratorOptions& opts) {
  if (!(l1 < l2) || !(h1 < h2))
    throw std::invalid_argument("levels must satisfy l1 < l2 and h1 < h2");
  const auto ph0 = volterra_phase(p, false);
  const auto phm = volterra_phase(p, true);
  // reference line through the two centres: b y + d x = a + c
  const double a = p.a, b = p.b, c = p.c, d = p.d;
  auto line_y = [&](double x) { return (a + c - d * x) / b; };
  auto on_line = [&](double x) { return Point{x, line_y(x)}; };
  auto e0 = [&](double x) { return ph0.energy(on_line(x)); };
  auto em = [&](double x) { return phm.energy(on_line(x)); };
  const double x_cap = (a + c) / d;  // y -> 0 along the line
  const auto [p1l, p1r] = line_roots(e0, ph0.center.x, 0.0, x_cap, l1);
  const auto [p2l, p2r] = line_roots(e0, ph0.center.x, 0.0, x_cap, l2);
  const auto [q1l, q1r] = line_roots(em, phm.center.x, 0.0, x_cap, h1);
  const auto [q2l, q2r] = line_roots(em, phm.center.x, 0.0, x_cap, h2);

  LinkedAnnuli out;
  out.order_x = {p2l, p1l, q2l, q1l, p1r, p2r, q1r, q2r};
  bool linked = true;
  for (int i = 0; i + 1 < 8; ++i) {
    if (i % 2 == 0) {
      if (!(out.order_x[i] < out.order_x[i + 1])) linked = false;
    } else {
      if (out.order_x[i] > out.order_x[i + 1]) linked = false;
    }
  }
  out.linked = linked;
  if (!linked) return out;

  // closed level loops, one full turn with dense storage
  const LevelLoop g0[2] = {closed_loop(ph0, on_line(p1l), opts), closed_loop(ph0, on_line(p2l), opts)};
  const LevelLoop gm[2] = {closed_loop(phm, on_line(q1l), opts), closed_loop(phm, on_line(q2l), opts)};
  const double hlev[2] = {h1, h2};
  const double llev[2] = {l1, l2};
  auto side_sign = [&](const Point& z) { return b * z.y + d * z.x - (a + c); };

  // crossing times: on each free-phase loop the harvesting-level crossings,
  // split by side of the reference line (one below, one above when linked)
  double t0m[2][2][2];  // [loop i][level j][half: 0 below, 1 above]
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      auto ts = loop_crossings(g0[i], [&](const Point& z) { return phm.energy(z) - hlev[j]; });
      std::vector<double> below, above;
      for (double t : ts)
        (side_sign(g0[i].traj.at(t)) < 0 ? below : above).push_back(t);
      if (below.size() != 1 || above.size() != 1)
        throw std::runtime_error("level curves do not intersect transversally in both halves");
      t0m[i][j][0] = below[0];
      t0m[i][j][1] = above[0];
    }
  double tm0[2][2][2];  // [loop j][level i][half]
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      auto ts = loop_crossings(gm[j], [&](const Point& z) { return ph0.energy(z) - llev[i]; });
      std::vector<double> below, above;
      for (double t : ts)
        (side_sign(gm[j].traj.at(t)) < 0 ? below : above).push_back(t);
      if (below.size() != 1 || above.size() != 1)
        throw std::runtime_error("level curves do not intersect transversally in both halves");
      tm0[j][i][0] = below[0];
      tm0[j][i][1] = above[0];
    }

  // wide enough to absorb the chordal error of the sampled boundary arcs,
  // so the parameterized boundary itself passes the membership test
  const double tol = 1e-7 * std::max({1.0, std::abs(l2), std::abs(h2)});
  auto make_half = [&](int half) {
    auto in_lens = [=](const Point& z) {
      double s = side_sign(z);
      if (half == 0 ? (s > 0) : (s < 0)) return false;
      const double el = ph0.energy(z), eh = phm.energy(z);
      return el >= l1 - tol && el <= l2 + tol && eh >= h1 - tol && eh <= h2 + tol;
    };
    // left/right sides on the free-phase loops, down/up on the harvesting loops
    Polyline left = loop_arc(g0[0], t0m[0][0][half], t0m[0][1][half], in_lens, 2049);
    Polyline right = loop_arc(g0[1], t0m[1][0][half], t0m[1][1][half], in_lens, 2049);
    Polyline down = loop_arc(gm[0], tm0[0][0][half], tm0[0][1][half], in_lens, 2049);
    Polyline up = loop_arc(gm[1], tm0[1][0][half], tm0[1][1][half], in_lens, 2049);
    return std::array<Polyline, 4>{left, right, down, up};
  };

  {
    auto arcs = make_half(0);
    auto contains = [=](const Point& z) {
      if (z.x <= 0.0 || z.y <= 0.0) return false;
      if (b * z.y + d * z.x - (a + c) > 0) return false;
      const double el = ph0.energy(z), eh = phm.energy(z);
      return el >= l1 - tol && el <= l2 + tol && eh >= h1 - tol && eh <= h2 + tol;
    };
    out.r1 = coons_rectangle("R1", arcs[0], arcs[1], arcs[2], arcs[3], contains, SideAxis::U);
  }
  {
    auto arcs = make_half(1);
    auto contains = [=](const Point& z) {
      if (z.x <= 0.0 || z.y <= 0.0) return false;
      if (b * z.y + d * z.x - (a + c) < 0) return false;
      const double el = ph0.energy(z), eh = phm.energy(z);
      return el >= l1 - tol && el <= l2 + tol && eh >= h1 - tol && eh <= h2 + tol;
    };
    out.r2 = coons_rectangle("R2", arcs[0], arcs[1], arcs[2], arcs[3], contains, SideAxis::V);
  }
  return out;
}

// ---- Duffing mirror rectangles ----

std::pair<OrientedRectangle, OrientedRectangle> duffing_linked_rects(const DuffingParams& p,
                                                                     double eq1, double eq2,
                                                                     double es1, double es2) {
  if (!(eq1 < eq2) || !(es1 < es2))
    throw std::invalid_argument("levels must satisfy eq1 < eq2 and es1 < es2");
  const double k = p.k, q = p.q, s = p.s;
  if (es2 > eq1)
    throw std::invalid_argument("level bands must satisfy es2 <= eq1 to stay in x <= 0");
  if (s * eq1 + q * es1 < 0.0)
    throw std::invalid_argument("level bands intersect in an empty set");
  // For x <= 0: E_q = y^2/2 - q x and E_s = y^2/2 + s x, so
  // x = (E_s - E_q)/(q + s) and y^2/2 = (s E_q + q E_s)/(q + s).
  auto point_of = [q, s](double e, double f, double ysign) {
    const double x = (f - e) / (q + s);
    const double half_y2 = std::max(0.0, (s * e + q * f) / (q + s));
    return Point{x, ysign * std::sqrt(2.0 * half_y2)};
  };
  auto energy_q = [k, q](const Point& z) {
    const double xp = std::max(0.0, z.x);
    return 0.5 * z.y * z.y + 0.5 * k * xp * xp - q * z.x;
  };
  auto energy_s = [k, s](const Point& z) {
    const double xp = std::max(0.0, z.x);
    return 0.5 * z.y * z.y + 0.5 * k * xp * xp + s * z.x;
  };
  const double tol = 1e-9 * std::max({1.0, eq2, es2});
  auto band = [=](const Point& z) {
    if (z.x > tol) return false;
    const double eq = energy_q(z), es = energy_s(z);
    return eq >= eq1 - tol && eq <= eq2 + tol && es >= es1 - tol && es <= es2 + tol;
  };
  auto r1 = make_oriented_rectangle(
      "R1",
      [=](double u, double v) {
        return point_of(eq1 + u * (eq2 - eq1), es1 + v * (es2 - es1), -1.0);
      },
      [=](const Point& z) { return z.y <= tol && band(z); }, SideAxis::U);
  auto r2 = make_oriented_rectangle(
      "R2",
      [=](double u, double v) {
        return point_of(eq1 + u * (eq2 - eq1), es1 + v * (es2 - es1), +1.0);
      },
      [=](const Point& z) { return z.y >= -tol && band(z); }, SideAxis::V);
  return {std::move(r1), std::move(r2)};
}

// ---- fixed points of two-phase compositions ----

std::vector<Point> switched_fixed_point_candidates(
    const PlanarMap& phi, const PlanarMap& psi,
    const std::function<double(const Point&)>& e1,
    const std::function<double(const Point&)>& e2, Point seed,
    double curve_step, double f_tol, int max_trace_steps) {
  if (!(curve_step > 0.0)) throw std::invalid_argument("curve_step must be positive");
  auto f1 = [&](const Point& z) { return e2(phi(z)) - e2(z); };
  auto f2 = [&](const Point& z) { return e1(psi(phi(z))) - e1(z); };
  const double h = 5e-3 * curve_step;
  auto grad_f1 = [&](const Point& z) {
    return Point{(f1({z.x + h, z.y}) - f1({z.x - h, z.y})) / (2 * h),
                 (f1({z.x, z.y + h}) - f1({z.x, z.y - h})) / (2 * h)};
  };
  // 1d Newton along the gradient, pulling z back onto {f1 = 0}
  auto correct = [&](Point z) -> std::optional<Point> {
    for (int it = 0; it < 16; ++it) {
      const double v = f1(z);
      if (std::abs(v) < f_tol) return z;
      const Point g = grad_f1(z);
      const double n2 = g.x * g.x + g.y * g.y;
      if (!(n2 > 0.0) || !std::isfinite(n2)) return std::nullopt;
      z.x -= v * g.x / n2;
      z.y -= v * g.y / n2;
    }
    return std::abs(f1(z)) < 1e3 * f_tol ? std::optional<Point>(z) : std::nullopt;
  };
  std::vector<Point> out;
  const auto start = correct(seed);
  if (!start) return out;
  // bisect f2 along the corrected chord between two on-curve nodes
  auto bisect = [&](Point lo, double vlo, Point hi) -> std::optional<Point> {
    for (int it = 0; it < 60; ++it) {
      const auto mid = correct({0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)});
      if (!mid) return std::nullopt;
      const double vm = f2(*mid);
      if (std::abs(vm) < f_tol) return mid;
      if ((vm < 0) == (vlo < 0)) {
        lo = *mid;
        vlo = vm;
      } else {
        hi = *mid;
      }
      if (std::hypot(hi.x - lo.x, hi.y - lo.y) < 1e-15 * (1 + std::abs(lo.x) + std::abs(lo.y)))
        return correct({0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)});
    }
    return correct({0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)});
  };
  const double v_start = f2(*start);
  if (std::abs(v_start) < f_tol) {
    out.push_back(*start);
    return out;
  }
  for (const double dir : {1.0, -1.0}) {
    Point z = *start;
    double v = v_start;
    for (int n = 0; n < max_trace_steps; ++n) {
      const Point g = grad_f1(z);
      const double gn = std::hypot(g.x, g.y);
      if (!(gn > 0.0) || !std::isfinite(gn)) break;
      const Point pred{z.x - dir * curve_step * g.y / gn, z.y + dir * curve_step * g.x / gn};
      const auto next = correct(pred);
      if (!next) break;
      const double vn = f2(*next);
      if ((vn < 0) != (v < 0)) {
        if (const auto root = bisect(z, v, *next)) out.push_back(*root);
        break;
      }
      z = *next;
      v = vn;
    }
  }
  return out;
}

// ---- memoized flow map ----

namespace {
std::uint64_t point_key(const Point& z) {
  std::uint64_t bx, by;
  std::memcpy(&bx, &z.x, 8);
  std::memcpy(&by, &z.y, 8);
  return bx * 0x9e3779b97f4a7c15ULL ^ (by + 0x9e3779b97f4a7c15ULL + (bx << 6) + (bx >> 2));
}
}  // namespace

AngleFlow CachedFlowMap::get(const Point& z) const {
  const std::uint64_t key = point_key(z);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end())
      for (const auto& [p, v] : it->second)
        if (p.x == z.x && p.y == z.y) return v;
  }
  AngleFlow v = eval_(z);
  std::lock_guard<std::mutex> lock(mu_);
  cache_[key].emplace_back(z, v);
  return v;
}

PlanarMap CachedFlowMap::as_map() const {
  return [this](const Point& z) { return get(z).end; };
}

std::function<double(const Point&)> CachedFlowMap::angle_about(Point center) const {
  return [this, center](const Point& z) {
    return std::atan2(z.y - center.y, z.x - center.x) + get(z).dtheta;
  };
}

size_t CachedFlowMap::cache_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  size_t n = 0;
  for (const auto& [k, v] : cache_) n += v.size();
  return n;
}

}  // namespace sc
