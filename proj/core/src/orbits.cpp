#include "stretchchaos/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "stretchchaos/parallel.hpp"
#include "stretchchaos/report.hpp"

namespace sc {

namespace {

std::string word_string(const std::vector<int>& w) {
  std::string s;
  for (int v : w) s += static_cast<char>('0' + v);
  return s;
}

// ---- 1d covering machinery ----

struct Branch {
  Interval dom;
  bool increasing = false;
};

// monotone branches of f on [lo,hi], located on a dense grid
std::vector<Branch> monotone_branches(const IntervalMap& f, const Interval& iv, int grid = 2048) {
  std::vector<double> xs(grid + 1), ys(grid + 1);
  for (int i = 0; i <= grid; ++i) {
    xs[i] = iv.lo + (iv.hi - iv.lo) * i / grid;
    ys[i] = f(xs[i]);
  }
  std::vector<Branch> out;
  int start = 0;
  auto dir = [&](int i) { return ys[i + 1] >= ys[i]; };
  bool inc = dir(0);
  for (int i = 1; i < grid; ++i) {
    if (dir(i) != inc) {
      out.push_back({{xs[start], xs[i]}, inc});
      start = i;
      inc = dir(i);
    }
  }
  out.push_back({{xs[start], xs[grid]}, inc});
  return out;
}

// solve f(x) = target on a monotone branch by bisection
double solve_on_branch(const IntervalMap& f, const Branch& br, double target) {
  double lo = br.dom.lo, hi = br.dom.hi;
  const double flo = f(lo), fhi = f(hi);
  const double a = br.increasing ? flo : fhi, b = br.increasing ? fhi : flo;
  if (target <= a) return br.increasing ? lo : hi;
  if (target >= b) return br.increasing ? hi : lo;
  for (int it = 0; it < 200 && hi - lo > 1e-17 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const bool below = f(mid) < target;
    if (below == br.increasing)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double iterate_1d(const IntervalMap& f, double x, int k) {
  for (int i = 0; i < k; ++i) x = f(x);
  return x;
}

}  // namespace

std::vector<Interval> logistic_covering_intervals(double mu) {
  if (!(mu > 4.0))
    throw std::invalid_argument("two full branches over [0,1] require mu > 4");
  const double r = std::sqrt(1.0 - 4.0 / mu);
  return {{0.0, 0.5 * (1.0 - r)}, {0.5 * (1.0 + r), 1.0}};
}

SecondIterateCover logistic_second_iterate_cover(double mu, double delta) {
  if (!(mu > 2.0) || !(mu <= 4.0))
    throw std::invalid_argument("second-iterate construction expects 2 < mu <= 4");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  auto f = [mu](double x) { return mu * x * (1.0 - x); };
  auto f2 = [&](double x) { return f(f(x)); };
  const double top = f(0.5);                 // maximum of F, attained at 1/2
  const double bot = f2(0.5);                // minimum of F^2 on the hump
  const double cm = 0.5 * (1.0 - std::sqrt(1.0 - 2.0 / mu));  // F(cm) = 1/2
  const double cp = 0.5 * (1.0 + std::sqrt(1.0 - 2.0 / mu));
  const double lo = bot + delta;
  if (!(lo < cm))
    throw std::runtime_error("window does not reach the left branch; lower delta or change mu");
  // F^2 is monotone on [cm, 1/2] (decreasing) and on [1/2, cp] (increasing),
  // sweeping [bot, top] on each; cut both branches at level lo.
  auto cut = [&](double a, double b, bool increasing) {
    for (int i = 0; i < 200 && (b - a) > 1e-17; ++i) {
      const double mid = 0.5 * (a + b);
      const bool below = f2(mid) < lo;
      if (below == increasing)
        a = mid;
      else
        b = mid;
    }
    return 0.5 * (a + b);
  };
  SecondIterateCover out;
  out.window = {lo, top};
  out.branches = {{cm, cut(cm, 0.5, false)}, {cut(0.5, cp, true), cp}};
  return out;
}

PeriodicOrbitResult covering_periodic_point_1d(const IntervalMap& f,
                                               const std::vector<Interval>& intervals,
                                               const std::vector<int>& itinerary,
                                               double tol) {
  if (itinerary.empty()) throw std::invalid_argument("covering_periodic_point_1d: empty word");
  for (int s : itinerary)
    if (s < 0 || s >= static_cast<int>(intervals.size()))
      throw std::invalid_argument("covering_periodic_point_1d: symbol out of range");
  const int k = static_cast<int>(itinerary.size());

  // covering preconditions f(I_{s_i}) >= I_{s_{i+1}}
  for (int i = 0; i < k; ++i) {
    const Interval& src = intervals[itinerary[i]];
    const Interval& dst = intervals[itinerary[(i + 1) % k]];
    double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
    const int grid = 4096;
    for (int g = 0; g <= grid; ++g) {
      const double y = f(src.lo + (src.hi - src.lo) * g / grid);
      fmin = std::min(fmin, y);
      fmax = std::max(fmax, y);
    }
    const double slack = 1e-9 * std::max(1.0, std::abs(dst.hi));
    if (fmin > dst.lo + slack || fmax < dst.hi - slack)
      throw std::runtime_error("covering precondition fails for pair (" + std::to_string(i) +
                               ", " + std::to_string((i + 1) % k) + ")");
  }

  // nested preimages backwards: B_i in I_{s_i} with f(B_i) = B_{i+1}
  Interval B = intervals[itinerary[0]];
  for (int i = k - 1; i >= 0; --i) {
    const Interval& src = intervals[itinerary[i]];
    bool done = false;
    for (const Branch& br : monotone_branches(f, src)) {
      const double e0 = f(br.dom.lo), e1 = f(br.dom.hi);
      const double rmin = std::min(e0, e1), rmax = std::max(e0, e1);
      const double slack = 1e-9 * std::max(1.0, std::abs(rmax));
      if (rmin > B.lo + slack || rmax < B.hi - slack) continue;
      const double xa = solve_on_branch(f, br, B.lo);
      const double xb = solve_on_branch(f, br, B.hi);
      B = {std::min(xa, xb), std::max(xa, xb)};
      done = true;
      break;
    }
    if (!done)
      throw std::runtime_error("covering precondition fails for pair (" + std::to_string(i) +
                               ", " + std::to_string((i + 1) % k) + ")");
  }

  // bisect g(x) = f^k(x) - x on B
  auto g = [&](double x) { return iterate_1d(f, x, k) - x; };
  double lo = B.lo, hi = B.hi;
  double glo = g(lo), ghi = g(hi);
  if (glo * ghi > 0.0) {
    // slack in the preimage construction can push the bracket slightly off;
    // rescan for a sign change inside
    const int grid = 4096;
    bool found = false;
    double px = lo, pg = glo;
    for (int i = 1; i <= grid; ++i) {
      const double x = lo + (hi - lo) * i / grid;
      const double gx = g(x);
      if (pg == 0.0 || pg * gx <= 0.0) {
        lo = px;
        hi = x;
        glo = pg;
        ghi = gx;
        found = true;
        break;
      }
      px = x;
      pg = gx;
    }
    if (!found && std::min(std::abs(glo), std::abs(ghi)) > tol)
      throw std::runtime_error("covering_periodic_point_1d: no sign change of f^k(x)-x");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-17 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) {
      lo = hi = mid;
      break;
    }
    if (glo * gm <= 0.0) {
      hi = mid;
      ghi = gm;
    } else {
      lo = mid;
      glo = gm;
    }
  }
  const double x_star = std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;

  PeriodicOrbitResult res;
  res.itinerary = itinerary;
  res.method = OrbitMethod::Covering1d;
  res.point = {x_star, 0.0};
  res.residual = std::abs(g(x_star));
  res.itinerary_verified = true;
  double x = x_star;
  for (int i = 0; i < k; ++i) {
    const Interval& iv = intervals[itinerary[i]];
    const double slack = 1e-9 * std::max(1.0, std::abs(iv.hi));
    if (x < iv.lo - slack || x > iv.hi + slack) res.itinerary_verified = false;
    x = f(x);
  }
  res.status = (res.residual < tol && res.itinerary_verified) ? OrbitStatus::Found
                                                              : OrbitStatus::NumericalFailure;
  if (res.status != OrbitStatus::Found)
    res.note = "bisection residual " + fmt_double(res.residual);
  return res;
}

namespace {

// ---- planar Newton machinery ----

struct OrbitEval {
  Point end{};
  bool ok = false;
  bool itinerary_ok = false;  // every iterate in its region (with slack)
  bool itinerary_exact = false;
};

bool region_contains_slack(const RegionPredicate& r, const Point& p, double band) {
  if (r.contains(p)) return true;
  if (band <= 0.0) return false;
  for (int d = 0; d < 8; ++d) {
    const double a = d * 0.25 * 3.14159265358979323846;
    if (r.contains({p.x + band * std::cos(a), p.y + band * std::sin(a)})) return true;
  }
  return false;
}

OrbitEval eval_orbit(const PlanarMap& map, const std::vector<RegionPredicate>& regions,
                     const std::vector<int>& itinerary, Point w, double band) {
  OrbitEval e;
  e.itinerary_ok = true;
  e.itinerary_exact = true;
  try {
    for (size_t i = 0; i < itinerary.size(); ++i) {
      const RegionPredicate& r = regions[itinerary[i]];
      if (!r.contains(w)) {
        e.itinerary_exact = false;
        if (!region_contains_slack(r, w, band)) e.itinerary_ok = false;
      }
      w = map(w);
    }
    e.end = w;
    e.ok = true;
  } catch (const std::exception&) {
    e.ok = false;
  }
  return e;
}

double residual_norm(const Point& w, const Point& end) {
  return std::max(std::abs(end.x - w.x), std::abs(end.y - w.y));
}

}  // namespace

PeriodicOrbitResult newton_periodic_point_2d(const PlanarMap& map,
                                             const std::vector<RegionPredicate>& regions,
                                             const std::vector<int>& itinerary,
                                             const NewtonOptions& opts) {
  if (itinerary.empty()) throw std::invalid_argument("newton_periodic_point_2d: empty word");
  for (int s : itinerary)
    if (s < 0 || s >= static_cast<int>(regions.size()))
      throw std::invalid_argument("newton_periodic_point_2d: symbol out of range");

  PeriodicOrbitResult res;
  res.itinerary = itinerary;
  res.method = OrbitMethod::Newton2d;

  const RegionPredicate& start = regions[itinerary[0]];
  const Box& bb = start.bbox;
  const double band =
      opts.slack * std::max(bb.x_hi - bb.x_lo, bb.y_hi - bb.y_lo);

  struct Seed {
    Point w;
    double r;
  };
  // grid seeds (cell centres) plus bbox corners and edge midpoints so
  // fixed points sitting exactly on region corners are reachable;
  // the grid is doubled while no cell hits the itinerary's domain
  // (long words live on thin preimage cells)
  auto seeds_at = [&](int n) {
    std::vector<Point> candidates;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        candidates.push_back({bb.x_lo + (bb.x_hi - bb.x_lo) * (i + 0.5) / n,
                              bb.y_lo + (bb.y_hi - bb.y_lo) * (j + 0.5) / n});
    for (double fx : {0.0, 0.5, 1.0})
      for (double fy : {0.0, 0.5, 1.0})
        candidates.push_back({bb.x_lo + fx * (bb.x_hi - bb.x_lo),
                              bb.y_lo + fy * (bb.y_hi - bb.y_lo)});
    std::vector<Seed> scored(candidates.size(),
                             {Point{}, std::numeric_limits<double>::infinity()});
    parallel_for(candidates.size(), [&](size_t i) {
      const Point& c = candidates[i];
      if (!start.contains(c)) return;
      const OrbitEval e = eval_orbit(map, regions, itinerary, c, band);
      if (!e.ok || !e.itinerary_ok) return;
      scored[i] = {c, residual_norm(c, e.end)};
    });
    std::vector<Seed> seeds;
    for (const Seed& s : scored)
      if (std::isfinite(s.r)) seeds.push_back(s);
    return seeds;
  };
  int n = std::max(2, opts.grid_density);
  std::vector<Seed> seeds = seeds_at(n);
  while (seeds.empty() && 2 * n <= opts.max_grid_density) {
    n *= 2;
    seeds = seeds_at(n);
  }
  if (seeds.empty()) {
    res.status = OrbitStatus::NotFound;
    res.note = "no feasible seed (grid " + std::to_string(n) + "x" + std::to_string(n) + ")";
    return res;
  }
  std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.r < b.r; });
  if (seeds.size() > 40) seeds.resize(40);

  auto try_accept = [&](const Point& w) -> bool {
    const OrbitEval e = eval_orbit(map, regions, itinerary, w, 0.0);
    if (!e.ok) return false;
    const double r = residual_norm(w, e.end);
    if (r < opts.tol && e.itinerary_exact) {
      res.status = OrbitStatus::Found;
      res.point = w;
      res.residual = r;
      res.itinerary_verified = true;
      return true;
    }
    return false;
  };

  double best_res = std::numeric_limits<double>::infinity();
  Point best_w = seeds.front().w;

  for (const Seed& seed : seeds) {
    Point w = seed.w;
    double r = seed.r;
    for (int it = 0; it < opts.max_newton_iter; ++it) {
      if (try_accept(w)) return res;
      const OrbitEval e0 = eval_orbit(map, regions, itinerary, w, band);
      if (!e0.ok) break;
      const Point g{e0.end.x - w.x, e0.end.y - w.y};
      const double hx = 1e-7 * std::max(1.0, std::abs(w.x));
      const double hy = 1e-7 * std::max(1.0, std::abs(w.y));
      const OrbitEval exp = eval_orbit(map, regions, itinerary, {w.x + hx, w.y}, band);
      const OrbitEval exm = eval_orbit(map, regions, itinerary, {w.x - hx, w.y}, band);
      const OrbitEval eyp = eval_orbit(map, regions, itinerary, {w.x, w.y + hy}, band);
      const OrbitEval eym = eval_orbit(map, regions, itinerary, {w.x, w.y - hy}, band);
      if (!exp.ok || !exm.ok || !eyp.ok || !eym.ok) break;
      // Jacobian of G(w) = psi^k(w) - w, central differences
      const double j11 = (exp.end.x - exm.end.x) / (2 * hx) - 1.0;
      const double j21 = (exp.end.y - exm.end.y) / (2 * hx);
      const double j12 = (eyp.end.x - eym.end.x) / (2 * hy);
      const double j22 = (eyp.end.y - eym.end.y) / (2 * hy) - 1.0;
      const double det = j11 * j22 - j12 * j21;
      if (std::abs(det) < 1e-14) break;
      const double dx = (-g.x * j22 + g.y * j12) / det;
      const double dy = (-j11 * g.y + j21 * g.x) / det;
      bool stepped = false;
      for (double damp : {1.0, 0.5, 0.25}) {
        const Point w2{w.x + damp * dx, w.y + damp * dy};
        const OrbitEval e2 = eval_orbit(map, regions, itinerary, w2, band);
        if (!e2.ok) continue;
        const double r2 = residual_norm(w2, e2.end);
        if (r2 < r) {
          w = w2;
          r = r2;
          stepped = true;
          break;
        }
      }
      if (!stepped) break;
    }
    if (try_accept(w)) return res;
    if (r < best_res) {
      best_res = r;
      best_w = w;
    }
  }

  // fallback: shrinking pattern search around the best point seen
  {
    Point w = best_w;
    double r = best_res;
    double step = band > 0 ? band : 1e-3;
    for (int round = 0; round < 60 && r >= opts.tol && step > 1e-16; ++round) {
      bool improved = false;
      for (const auto& [dx, dy] : std::initializer_list<std::pair<double, double>>{
               {step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step},
               {step, step}, {step, -step}, {-step, step}, {-step, -step}}) {
        const Point w2{w.x + dx, w.y + dy};
        const OrbitEval e2 = eval_orbit(map, regions, itinerary, w2, band);
        if (!e2.ok) continue;
        const double r2 = residual_norm(w2, e2.end);
        if (r2 < r) {
          w = w2;
          r = r2;
          improved = true;
        }
      }
      if (!improved) step *= 0.5;
    }
    if (try_accept(w)) return res;
    best_res = std::min(best_res, r);
  }

  res.status = OrbitStatus::NotFound;
  res.residual = best_res;
  res.note = "no seed converged below tol (best residual " + fmt_double(best_res) + ")";
  return res;
}

nlohmann::json PeriodicOrbitResult::to_json() const {
  return {{"itinerary", word_string(itinerary)},
          {"status", status == OrbitStatus::Found
                         ? "found"
                         : (status == OrbitStatus::NotFound ? "not_found" : "numerical_failure")},
          {"x", fmt_double(point.x)},
          {"y", fmt_double(point.y)},
          {"residual", fmt_double(residual)},
          {"itinerary_verified", itinerary_verified},
          {"method", method == OrbitMethod::Covering1d ? "covering_1d" : "newton_2d"},
          {"note", note}};
}

nlohmann::json ChaosCertificate::to_json() const {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["version"] = kVersion;
  j["kind"] = "chaos_certificate";
  j["stretch"] = stretch.to_json();
  j["entropy_bound"] = fmt_double(entropy_bound);
  j["pass"] = pass;
  j["failures"] = failures;
  j["transition_matrix"] = nlohmann::json::array();
  for (int i = 0; i < transitions.n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < transitions.n; ++k) row.push_back(transitions.at(i, k));
    j["transition_matrix"].push_back(std::move(row));
  }
  j["orbits"] = nlohmann::json::array();
  for (const auto& o : orbits) j["orbits"].push_back(o.to_json());
  return j;
}

void ChaosCertificate::write_orbits_csv(std::ostream& os) const {
  os << "itinerary,k,x,y,residual\n";
  for (const auto& o : orbits)
    os << word_string(o.itinerary) << ',' << o.itinerary.size() << ',' << fmt_double(o.point.x)
       << ',' << fmt_double(o.point.y) << ',' << fmt_double(o.residual) << '\n';
}

ChaosCertificate chaos_certificate(const PlanarMap& map, const OrientedRectangle& rectA,
                                   const std::vector<RegionPredicate>& regions,
                                   int max_period, const std::vector<Path>& paths,
                                   const StretchOptions& stretch_opts,
                                   const NewtonOptions& newton_opts) {
  ChaosCertificate cert;
  cert.stretch = check_stretch(map, rectA, rectA, regions, paths, stretch_opts);
  const int m = static_cast<int>(regions.size());
  cert.transitions = SymbolMatrix::zero(m);
  if (cert.stretch.all_pass()) {
    for (auto& v : cert.transitions.a) v = 1;
    cert.entropy_bound = entropy_lower_bound(cert.transitions);
    for (const auto& word : primitive_cyclic_words(m, max_period)) {
      auto orbit = newton_periodic_point_2d(map, regions, word, newton_opts);
      if (orbit.status != OrbitStatus::Found) ++cert.failures;
      cert.orbits.push_back(std::move(orbit));
    }
    cert.pass = (cert.failures == 0);
  }
  return cert;
}

ChaosCertificate chaos_certificate_interval(const IntervalMap& f,
                                            const std::vector<Interval>& intervals,
                                            int max_period, int n_paths, int n_samples,
                                            std::uint64_t seed, double tol_residual) {
  if (intervals.empty()) throw std::invalid_argument("chaos_certificate_interval: no intervals");
  double lo = intervals.front().lo, hi = intervals.front().hi;
  for (const auto& iv : intervals) {
    lo = std::min(lo, iv.lo);
    hi = std::max(hi, iv.hi);
  }
  auto rect = make_rect_from_graphs("interval_strip", [](double) { return 0.0; },
                                    [](double) { return 1.0; }, lo, hi);
  std::vector<RegionPredicate> regions;
  for (size_t i = 0; i < intervals.size(); ++i) {
    RegionPredicate r;
    r.label = "I" + std::to_string(i);
    const Interval iv = intervals[i];
    r.bbox = Box{iv.lo, iv.hi, 0.0, 1.0};
    r.contains = [iv](const Point& z) {
      return z.x >= iv.lo && z.x <= iv.hi && z.y >= 0.0 && z.y <= 1.0;
    };
    regions.push_back(std::move(r));
  }
  PlanarMap embedded = [f](const Point& z) -> Point { return {f(z.x), z.y}; };
  const auto paths = sample_test_paths(rect, n_paths, n_samples, seed);
  ChaosCertificate cert;
  StretchOptions sopts;
  sopts.seed = seed;
  sopts.map_id = "interval_embedding";
  cert.stretch = check_stretch(embedded, rect, rect, regions, paths, sopts);
  const int m = static_cast<int>(intervals.size());
  cert.transitions = SymbolMatrix::zero(m);
  if (cert.stretch.all_pass()) {
    for (auto& v : cert.transitions.a) v = 1;
    cert.entropy_bound = entropy_lower_bound(cert.transitions);
    for (const auto& word : primitive_cyclic_words(m, max_period)) {
      PeriodicOrbitResult orbit;
      try {
        orbit = covering_periodic_point_1d(f, intervals, word, tol_residual);
      } catch (const std::exception& ex) {
        orbit.itinerary = word;
        orbit.status = OrbitStatus::NumericalFailure;
        orbit.note = ex.what();
      }
      if (orbit.status != OrbitStatus::Found) ++cert.failures;
      cert.orbits.push_back(std::move(orbit));
    }
    cert.pass = (cert.failures == 0);
  }
  return cert;
}

}  // namespace sc
