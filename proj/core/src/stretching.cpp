#include "stretchchaos/stretching.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "stretchchaos/parallel.hpp"
#include "stretchchaos/report.hpp"

namespace sc {

int thread_budget() {
  if (const char* env = std::getenv("STRETCH_CHAOS_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int budget = std::min(thread_budget(), n);
  if (budget <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(budget);
  for (int t = 0; t < budget; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

const char* side_name(SideId s) {
  switch (s) {
    case SideId::Left: return "left";
    case SideId::Right: return "right";
    case SideId::Down: return "down";
    case SideId::Up: return "up";
    default: return "none";
  }
}

bool StretchReport::all_pass() const {
  return !regions.empty() &&
         std::all_of(regions.begin(), regions.end(),
                     [](const RegionStretchResult& r) { return r.pass; });
}

nlohmann::json StretchReport::to_json() const {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["version"] = kVersion;
  j["kind"] = "stretch";
  j["map"] = map_id;
  j["rect_a"] = rect_a;
  j["rect_b"] = rect_b;
  j["tol"] = fmt_double(tol);
  j["seed"] = seed;
  j["crossing_number"] = crossing_number;
  j["any_inconclusive"] = any_inconclusive;
  j["min_region_gap"] = fmt_double(min_region_gap);
  j["regions"] = nlohmann::json::array();
  for (const auto& r : regions) {
    nlohmann::json rr;
    rr["label"] = r.region_label;
    rr["paths_tested"] = r.paths_tested;
    rr["paths_witnessed"] = r.paths_witnessed;
    rr["paths_inconclusive"] = r.paths_inconclusive;
    rr["pass"] = r.pass;
    rr["witnesses"] = nlohmann::json::array();
    for (const auto& w : r.witnesses) {
      rr["witnesses"].push_back({{"path", w.path_id},
                                 {"t_lo", fmt_double(w.t_lo)},
                                 {"t_hi", fmt_double(w.t_hi)},
                                 {"entry", side_name(w.entry)},
                                 {"exit", side_name(w.exit)}});
    }
    j["regions"].push_back(std::move(rr));
  }
  return j;
}

namespace {

struct Sample {
  double t = 0.0;
  Point p{}, q{};
  bool ok = false;   // map evaluated
  bool in_k = false;
  bool in_b = false;
  bool active() const { return ok && in_k && in_b; }
};

struct PathAnalysis {
  PathOutcome outcome = PathOutcome::Failed;
  StretchWitness witness;
  int crossings = 0;
};

using Contains = std::function<bool(const Point&)>;

Sample eval_sample(const PlanarMap& map, const Path& path, const Contains& in_k,
                   const OrientedRectangle& rectB, double t) {
  Sample s;
  s.t = t;
  s.p = path.at(t);
  s.in_k = !in_k || in_k(s.p);
  if (!s.in_k) return s;  // the image is never consulted off K; skip the map
  try {
    s.q = map(s.p);
    s.ok = true;
  } catch (const std::exception&) {
    s.ok = false;
    return s;
  }
  s.in_b = rectB.contains(s.q);
  return s;
}

// Nearest B- side of a contour point, or None when neither component of
// the full contour is within band.
SideId attribute_side(const Point& q, const OrientedRectangle& rectB, double band) {
  const double dl = dist_to_polyline(q, rectB.side_left);
  const double dr = dist_to_polyline(q, rectB.side_right);
  const double dd = dist_to_polyline(q, rectB.side_down);
  const double du = dist_to_polyline(q, rectB.side_up);
  const double dlr = std::min(dl, dr);
  const double ddu = std::min(dd, du);
  if (dlr > band && ddu > band) return SideId::None;
  // corner points lie on both contours; the B- components win the tie,
  // since reaching them is what a crossing needs
  if (dlr <= band) return dl <= dr ? SideId::Left : SideId::Right;
  return dd <= du ? SideId::Down : SideId::Up;
}

// Refines the transition between an active sample at t_in and an
// inactive/failed one at t_out; returns the boundary-side attribution of
// the image there, or nullopt on evaluation failure during bisection.
struct Transition {
  double t = 0.0;
  SideId side = SideId::None;
};

std::optional<Transition> refine_transition(const PlanarMap& map, const Path& path,
                                            const Contains& in_k,
                                            const OrientedRectangle& rectB,
                                            double t_in, double t_out, double band) {
  double lo = t_in, hi = t_out;  // lo active, hi not
  Sample last_inside = eval_sample(map, path, in_k, rectB, lo);
  for (int it = 0; it < 80 && std::abs(hi - lo) > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Sample s = eval_sample(map, path, in_k, rectB, mid);
    if (!s.ok && !s.in_k) {
      // failed outside K: boundary is governed by K, treat as inactive
      hi = mid;
      continue;
    }
    if (!s.ok) return std::nullopt;  // domain error at a candidate point
    if (s.active()) {
      lo = mid;
      last_inside = s;
    } else {
      hi = mid;
    }
  }
  Transition tr;
  tr.t = lo;
  tr.side = attribute_side(last_inside.q, rectB, band);
  return tr;
}

// Full per-path analysis shared by check_stretch and crossing_count.
PathAnalysis analyze_path(const PlanarMap& map, const OrientedRectangle& rectB,
                          const Contains& in_k, const Path& path, double tol,
                          int refine_levels, int min_run_samples) {
  PathAnalysis out;
  std::vector<Sample> s;
  s.reserve(path.params.size());
  for (double t : path.params) s.push_back(eval_sample(map, path, in_k, rectB, t));

  // direct-attribution band at path endpoints; boundary points from the
  // bisection lie on the contour so the same band is comfortable
  const double band = std::max(tol, 1e-9 * std::max(1.0, rectB.diameter()));

  // local resampling so short candidate runs are not missed or judged thin
  for (int level = 0; level < refine_levels; ++level) {
    std::vector<double> extra;
    size_t i = 0;
    while (i < s.size()) {
      if (!s[i].active()) {
        ++i;
        continue;
      }
      size_t j = i;
      while (j + 1 < s.size() && s[j + 1].active()) ++j;
      if (static_cast<int>(j - i + 1) < min_run_samples) {
        const size_t lo = (i > 0) ? i - 1 : i;
        const size_t hi = (j + 1 < s.size()) ? j + 1 : j;
        for (size_t k = lo; k < hi; ++k) extra.push_back(0.5 * (s[k].t + s[k + 1].t));
      }
      i = j + 1;
    }
    if (extra.empty()) break;
    for (double t : extra) s.push_back(eval_sample(map, path, in_k, rectB, t));
    std::sort(s.begin(), s.end(), [](const Sample& a, const Sample& b) { return a.t < b.t; });
  }

  bool inconclusive = false;
  // a failed evaluation at a point of K could hide a candidate
  for (const auto& smp : s)
    if (!smp.ok && smp.in_k) inconclusive = true;

  size_t i = 0;
  while (i < s.size()) {
    if (!s[i].active()) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j + 1 < s.size() && s[j + 1].active()) ++j;

    SideId entry = SideId::None, exit = SideId::None;
    double t_lo = s[i].t, t_hi = s[j].t;
    bool run_inconclusive = false;

    if (i == 0) {
      entry = attribute_side(s[i].q, rectB, band);
    } else if (auto tr = refine_transition(map, path, in_k, rectB, s[i].t, s[i - 1].t, band)) {
      entry = tr->side;
      t_lo = tr->t;
    } else {
      run_inconclusive = true;
    }
    if (j + 1 == s.size()) {
      exit = attribute_side(s[j].q, rectB, band);
    } else if (auto tr = refine_transition(map, path, in_k, rectB, s[j].t, s[j + 1].t, band)) {
      exit = tr->side;
      t_hi = tr->t;
    } else {
      run_inconclusive = true;
    }

    const bool joins = (entry == SideId::Left && exit == SideId::Right) ||
                       (entry == SideId::Right && exit == SideId::Left);
    if (joins) {
      ++out.crossings;
      if (out.outcome != PathOutcome::Witnessed) {
        out.outcome = PathOutcome::Witnessed;
        out.witness.t_lo = t_lo;
        out.witness.t_hi = t_hi;
        out.witness.entry = entry;
        out.witness.exit = exit;
      }
    } else if (run_inconclusive ||
               static_cast<int>(j - i + 1) < min_run_samples) {
      inconclusive = true;
    }
    i = j + 1;
  }

  if (out.outcome != PathOutcome::Witnessed && inconclusive)
    out.outcome = PathOutcome::Inconclusive;
  return out;
}

double default_tol(const OrientedRectangle& rectB, double tol) {
  return tol > 0 ? tol : 1e-6 * rectB.diameter();
}

// min pairwise distance between samples attributed to different regions,
// capped for cost; -1 when fewer than two regions are populated
double min_region_gap(const std::vector<Path>& paths,
                      const std::vector<RegionPredicate>& regions) {
  std::vector<std::vector<Point>> pts(regions.size());
  const size_t cap = 1500;
  for (const auto& path : paths)
    for (size_t i = 0; i < path.points.size(); i += 4)
      for (size_t r = 0; r < regions.size(); ++r)
        if (pts[r].size() < cap && regions[r].contains(path.points[i]))
          pts[r].push_back(path.points[i]);
  double best = std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < pts.size(); ++a)
    for (size_t b = a + 1; b < pts.size(); ++b)
      for (const auto& pa : pts[a])
        for (const auto& pb : pts[b]) best = std::min(best, dist(pa, pb));
  return std::isfinite(best) ? best : -1.0;
}

}  // namespace

StretchReport check_stretch(const PlanarMap& map, const OrientedRectangle& rectA,
                            const OrientedRectangle& rectB,
                            const std::vector<RegionPredicate>& regions,
                            const std::vector<Path>& paths,
                            const StretchOptions& opts) {
  if (regions.empty()) throw std::invalid_argument("check_stretch: no regions");
  if (paths.empty()) throw std::invalid_argument("check_stretch: no paths");
  const double tol = default_tol(rectB, opts.tol);

  // sampled disjointness precondition
  if (regions.size() > 1) {
    std::atomic<bool> overlap{false};
    parallel_for(static_cast<int>(paths.size()), [&](int i) {
      for (const auto& p : paths[static_cast<size_t>(i)].points) {
        if (overlap.load(std::memory_order_relaxed)) return;
        int hits = 0;
        for (const auto& r : regions) hits += r.contains(p) ? 1 : 0;
        if (hits > 1) overlap.store(true, std::memory_order_relaxed);
      }
    });
    if (overlap.load())
      throw std::invalid_argument("check_stretch: regions overlap at a path sample");
  }

  StretchReport rep;
  rep.map_id = opts.map_id;
  rep.rect_a = rectA.name;
  rep.rect_b = rectB.name;
  rep.tol = tol;
  rep.seed = opts.seed;
  rep.min_region_gap = regions.size() > 1 ? min_region_gap(paths, regions) : -1.0;

  for (const auto& region : regions) {
    RegionStretchResult rr;
    rr.region_label = region.label;
    rr.paths_tested = static_cast<int>(paths.size());
    std::vector<PathAnalysis> results(paths.size());
    parallel_for(static_cast<int>(paths.size()), [&](int i) {
      results[i] = analyze_path(map, rectB, region.contains, paths[i], tol,
                                opts.refine_levels, opts.min_run_samples);
    });
    for (size_t i = 0; i < results.size(); ++i) {
      switch (results[i].outcome) {
        case PathOutcome::Witnessed: {
          ++rr.paths_witnessed;
          StretchWitness w = results[i].witness;
          w.path_id = static_cast<int>(i);
          rr.witnesses.push_back(w);
          break;
        }
        case PathOutcome::Inconclusive:
          ++rr.paths_inconclusive;
          rep.any_inconclusive = true;
          break;
        case PathOutcome::Failed:
          break;
      }
    }
    rr.pass = (rr.paths_witnessed == rr.paths_tested);
    if (rr.pass) ++rep.crossing_number;
    rep.regions.push_back(std::move(rr));
  }
  return rep;
}

int crossing_count(const PlanarMap& map, const OrientedRectangle& rectB,
                   const Path& path, double tol) {
  const auto a = analyze_path(map, rectB, Contains{}, path, default_tol(rectB, tol),
                              /*refine_levels=*/3, /*min_run_samples=*/8);
  return a.crossings;
}

StretchReport check_composition(const PlanarMap& phi, const PlanarMap& psi,
                                const OrientedRectangle& rectA,
                                const OrientedRectangle& rectB,
                                const OrientedRectangle& rectC,
                                const std::vector<RegionPredicate>& regionsH,
                                const std::vector<RegionPredicate>& regionsK,
                                const std::vector<Path>& paths,
                                const StretchOptions& opts) {
  std::vector<RegionPredicate> composite;
  for (const auto& h : regionsH)
    for (const auto& k : regionsK) {
      RegionPredicate r;
      r.label = h.label + "*" + k.label;
      auto hc = h.contains;
      auto kc = k.contains;
      auto bc = rectB.contains;
      r.contains = [phi, hc, kc, bc](const Point& z) {
        if (!hc(z)) return false;
        try {
          const Point w = phi(z);
          return bc(w) && kc(w);
        } catch (const std::exception&) {
          return false;
        }
      };
      composite.push_back(std::move(r));
    }
  PlanarMap comp = [phi, psi](const Point& z) { return psi(phi(z)); };
  StretchOptions o = opts;
  if (o.map_id == "map") o.map_id = "psi*phi";
  return check_stretch(comp, rectA, rectC, composite, paths, o);
}

}  // namespace sc
