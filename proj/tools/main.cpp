#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stretchchaos/flows.hpp"
#include "stretchchaos/geometry.hpp"
#include "stretchchaos/models.hpp"
#include "stretchchaos/orbits.hpp"
#include "stretchchaos/report.hpp"
#include "stretchchaos/stretching.hpp"
#include "stretchchaos/symdyn.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sc;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitBoundary = 2;
constexpr int kExitInconclusive = 3;
constexpr int kExitUsage = 64;
constexpr int kExitParse = 65;

struct CommonOpts {
  std::string out_dir = ".";
  int n_paths = 25;
  int n_samples = 257;
  std::uint64_t seed = 1;
  int max_period = 2;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--out", c.out_dir, "output directory for reports and plot data");
  cmd->add_option("--n-paths", c.n_paths, "test paths per stretch check");
  cmd->add_option("--n-samples", c.n_samples, "samples per path");
  cmd->add_option("--seed", c.seed, "path family seed");
  cmd->add_option("--max-period", c.max_period, "periodic orbits up to this period");
}

void write_json_file(const fs::path& p, const json& j) {
  std::ofstream os(p);
  os << j.dump(2) << '\n';
}

void write_rect_csv(const fs::path& p, const OrientedRectangle& r) {
  std::ofstream os(p);
  os << "side,x,y\n";
  auto dump = [&](const char* side, const std::vector<Point>& pts) {
    for (const Point& z : pts)
      os << side << ',' << fmt_double(z.x) << ',' << fmt_double(z.y) << '\n';
  };
  dump("left", r.side_left);
  dump("right", r.side_right);
  dump("down", r.side_down);
  dump("up", r.side_up);
}

void write_path_images_csv(const fs::path& p, const std::vector<Path>& paths,
                           const PlanarMap& map, size_t max_paths = 6) {
  std::ofstream os(p);
  os << "path,t,x,y,fx,fy\n";
  for (size_t i = 0; i < paths.size() && i < max_paths; ++i) {
    for (size_t k = 0; k < paths[i].points.size(); ++k) {
      const Point& z = paths[i].points[k];
      std::string fx = "nan", fy = "nan";
      try {
        const Point w = map(z);
        fx = fmt_double(w.x);
        fy = fmt_double(w.y);
      } catch (const std::exception&) {
      }
      os << i << ',' << fmt_double(paths[i].params[k]) << ',' << fmt_double(z.x) << ','
         << fmt_double(z.y) << ',' << fx << ',' << fy << '\n';
    }
  }
}

void write_region_grid_csv(const fs::path& p, const OrientedRectangle& rect,
                           const std::vector<RegionPredicate>& regions, int grid = 96,
                           int stride = 8) {
  std::ofstream os(p);
  os << "u,v,x,y,region\n";
  for (int i = 0; i <= grid; i += stride)
    for (int j = 0; j <= grid; j += stride) {
      const double u = static_cast<double>(i) / grid, v = static_cast<double>(j) / grid;
      const Point z = rect.param(u, v);
      int idx = -1;
      for (size_t k = 0; k < regions.size(); ++k)
        if (regions[k].contains(z)) {
          idx = static_cast<int>(k);
          break;
        }
      os << fmt_double(u) << ',' << fmt_double(v) << ',' << fmt_double(z.x) << ','
         << fmt_double(z.y) << ',' << idx << '\n';
    }
}

int verdict(bool pass, bool inconclusive, Overall conditions = Overall::HoldsStrict) {
  if (conditions == Overall::Fails) return kExitFail;
  if (inconclusive) return kExitInconclusive;
  if (!pass) return kExitFail;
  if (conditions == Overall::Boundary) return kExitBoundary;
  return kExitPass;
}

std::vector<int> parse_word(const std::string& s, int n_symbols) {
  std::vector<int> w;
  for (char c : s) {
    if (c < '0' || c > '9') throw CLI::ValidationError("itinerary must be digits");
    const int v = c - '0';
    if (v >= n_symbols) throw CLI::ValidationError("itinerary symbol out of range");
    w.push_back(v);
  }
  if (w.empty()) throw CLI::ValidationError("empty itinerary");
  return w;
}

// ---- verify: olg2d ----

int run_olg2d(const Olg2dParams& p, double K, const CommonOpts& c) {
  fs::create_directories(c.out_dir);
  json config{{"command", "verify olg2d"}, {"mu", p.mu},      {"b", p.b},
              {"beta", p.beta},            {"K", K},          {"n_paths", c.n_paths},
              {"n_samples", c.n_samples},  {"seed", c.seed},  {"max_period", c.max_period}};
  const ConditionReport cond = olg_conditions(p, K);
  write_json_file(fs::path(c.out_dir) / "conditions.json",
                  make_report("conditions", cond.to_json(), config));
  std::cout << "conditions: " << overall_name(cond.overall) << " (M = " << fmt_double(p.M())
            << ")\n";
  if (cond.overall == Overall::Fails) return kExitFail;

  const OlgGeometry geom = olg_geometry(p, K);
  const PlanarMap map = [p](const Point& z) { return eval_olg2d(p, z); };
  const auto paths = sample_test_paths(geom.rect, c.n_paths, c.n_samples, c.seed);
  StretchOptions sopts;
  sopts.seed = c.seed;
  sopts.map_id = "olg2d";
  NewtonOptions nopts;
  const ChaosCertificate cert =
      chaos_certificate(map, geom.rect, {geom.r0, geom.r1}, c.max_period, paths, sopts, nopts);

  write_json_file(fs::path(c.out_dir) / "certificate.json",
                  make_report("chaos-certificate", cert.to_json(), config));
  write_rect_csv(fs::path(c.out_dir) / "rect_A.csv", geom.rect);
  write_path_images_csv(fs::path(c.out_dir) / "path_images.csv", paths, map);
  write_region_grid_csv(fs::path(c.out_dir) / "regions.csv", geom.rect, {geom.r0, geom.r1});
  {
    std::ofstream os(fs::path(c.out_dir) / "orbits.csv");
    cert.write_orbits_csv(os);
  }
  std::cout << "stretch: crossing_number=" << cert.stretch.crossing_number
            << " entropy_bound=" << fmt_double(cert.entropy_bound)
            << " orbits=" << (cert.orbits.size() - cert.failures) << "/" << cert.orbits.size()
            << '\n';
  return verdict(cert.pass, cert.stretch.any_inconclusive, cond.overall);
}

// ---- verify: duopoly ----

int run_duopoly(const DuopolyParams& p, const CommonOpts& c) {
  fs::create_directories(c.out_dir);
  json config{{"command", "verify duopoly"},
              {"a", p.a},
              {"b", p.b},
              {"c1", p.c1},
              {"c2", p.c2},
              {"alpha", p.alpha},
              {"nu", p.nu},
              {"n_paths", c.n_paths},
              {"n_samples", c.n_samples},
              {"seed", c.seed},
              {"max_period", c.max_period}};
  const ConditionReport cond = duopoly_conditions(p);
  write_json_file(fs::path(c.out_dir) / "conditions.json",
                  make_report("conditions", cond.to_json(), config));
  std::cout << "conditions: " << overall_name(cond.overall) << " (P = " << fmt_double(p.P())
            << ", Q = " << fmt_double(p.Q()) << ")\n";
  if (cond.overall != Overall::HoldsStrict)
    return cond.overall == Overall::Boundary ? kExitBoundary : kExitFail;

  const DuopolyGeometry geom = duopoly_geometry(p);
  const PlanarMap map = [p](const Point& z) { return eval_duopoly(p, z); };
  const auto paths = sample_test_paths(geom.rect, c.n_paths, c.n_samples, c.seed);
  StretchOptions sopts;
  sopts.seed = c.seed;
  sopts.map_id = "duopoly";
  const ChaosCertificate cert =
      chaos_certificate(map, geom.rect, {geom.r0, geom.r1}, c.max_period, paths, sopts, {});

  write_json_file(fs::path(c.out_dir) / "certificate.json",
                  make_report("chaos-certificate", cert.to_json(), config));
  write_rect_csv(fs::path(c.out_dir) / "rect_A.csv", geom.rect);
  write_path_images_csv(fs::path(c.out_dir) / "path_images.csv", paths, map);
  write_region_grid_csv(fs::path(c.out_dir) / "regions.csv", geom.rect, {geom.r0, geom.r1});
  {
    std::ofstream os(fs::path(c.out_dir) / "orbits.csv");
    cert.write_orbits_csv(os);
  }
  std::cout << "stretch: crossing_number=" << cert.stretch.crossing_number
            << " orbits=" << (cert.orbits.size() - cert.failures) << "/" << cert.orbits.size()
            << '\n';
  return verdict(cert.pass, cert.stretch.any_inconclusive, cond.overall);
}

// ---- verify: logistic ----

int run_logistic(double mu, double delta, const CommonOpts& c) {
  fs::create_directories(c.out_dir);
  json config{{"command", "verify logistic"}, {"mu", mu},
              {"delta", delta},               {"n_paths", c.n_paths},
              {"n_samples", c.n_samples},     {"seed", c.seed},
              {"max_period", c.max_period}};
  json payload;
  ChaosCertificate cert;
  if (mu > 4.0) {
    const auto intervals = logistic_covering_intervals(mu);
    const IntervalMap f = [mu](double x) { return mu * x * (1.0 - x); };
    cert = chaos_certificate_interval(f, intervals, c.max_period, c.n_paths, c.n_samples, c.seed);
    payload["intervals"] = {{intervals[0].lo, intervals[0].hi}, {intervals[1].lo, intervals[1].hi}};
    payload["entropy_bound"] = cert.entropy_bound;
  } else {
    const auto cover = logistic_second_iterate_cover(mu, delta);
    const IntervalMap f = [mu](double x) { return mu * x * (1.0 - x); };
    const IntervalMap f2 = [f](double x) { return f(f(x)); };
    cert = chaos_certificate_interval(f2, cover.branches, c.max_period, c.n_paths, c.n_samples,
                                      c.seed);
    payload["window"] = {cover.window.lo, cover.window.hi};
    payload["intervals"] = {{cover.branches[0].lo, cover.branches[0].hi},
                            {cover.branches[1].lo, cover.branches[1].hi}};
    payload["entropy_bound_second_iterate"] = cert.entropy_bound;
    payload["entropy_bound"] = 0.5 * cert.entropy_bound;  // for the map itself
  }
  payload["certificate"] = cert.to_json();
  write_json_file(fs::path(c.out_dir) / "certificate.json",
                  make_report("chaos-certificate", payload, config));
  {
    std::ofstream os(fs::path(c.out_dir) / "orbits.csv");
    cert.write_orbits_csv(os);
  }
  std::cout << "stretch: crossing_number=" << cert.stretch.crossing_number
            << " orbits=" << (cert.orbits.size() - cert.failures) << "/" << cert.orbits.size()
            << '\n';
  return verdict(cert.pass, cert.stretch.any_inconclusive);
}

// ---- verify: linked twist maps ----

int run_ltm(int example, const Twist1Params& p1, const Twist2Params& p2, const CommonOpts& c) {
  fs::create_directories(c.out_dir);
  json config{{"command", example == 1 ? "verify ltm1" : "verify ltm2"},
              {"n_paths", c.n_paths},
              {"n_samples", c.n_samples},
              {"seed", c.seed}};
  TwistGeometry geom;
  PlanarMap phi, psi;
  std::function<double(const Point&)> image_angle;
  if (example == 1) {
    config["params"] = {{"r", p1.r},   {"p1", p1.p1}, {"p2", p1.p2}, {"q1", p1.q1},
                        {"q2", p1.q2}, {"c1", p1.c1}, {"d1", p1.d1}, {"c2", p1.c2},
                        {"d2", p1.d2}};
    geom = twist_geometry_1(p1);
    phi = [p1](const Point& z) { return eval_twist1_phi(p1, z); };
    psi = [p1](const Point& z) { return eval_twist1_psi(p1, z); };
    image_angle = [p1](const Point& z) {
      const double rho = std::hypot(z.x + p1.r, z.y);
      return std::atan2(z.y, z.x + p1.r) + p1.c1 + p1.d1 * rho;
    };
  } else {
    config["params"] = {{"p1", p2.p1}, {"p2", p2.p2}, {"q1", p2.q1}, {"q2", p2.q2},
                        {"c1", p2.c1}, {"d1", p2.d1}, {"c2", p2.c2}, {"d2", p2.d2}};
    geom = twist_geometry_2(p2);
    phi = [p2](const Point& z) { return eval_twist2_phi(p2, z); };
    psi = [p2](const Point& z) { return eval_twist2_psi(p2, z); };
    image_angle = [p2](const Point& z) {
      const double rho = std::hypot(z.x, z.y);
      const double ramp = std::clamp((rho - p2.p1) / (p2.p2 - p2.p1), 0.0, 1.0);
      return std::atan2(z.y, z.x) + p2.c1 + p2.d1 * ramp;
    };
  }
  const auto bands = twist_bands(phi, geom.rectA, geom.rectB, image_angle, 2);
  const auto pathsA = sample_test_paths(geom.rectA, c.n_paths, c.n_samples, c.seed);
  const auto pathsB = sample_test_paths(geom.rectB, c.n_paths, c.n_samples, c.seed + 1);
  StretchOptions so;
  so.seed = c.seed;
  so.map_id = "phi";
  const StretchReport rep_phi = check_stretch(phi, geom.rectA, geom.rectB, bands, pathsA, so);
  RegionPredicate whole_b{"K0", geom.rectB.contains, geom.rectB.bbox};
  so.map_id = "psi";
  const StretchReport rep_psi =
      check_stretch(psi, geom.rectB, geom.rectA, {whole_b}, pathsB, so);
  so.map_id = "psi*phi";
  const StretchReport rep_comp = check_composition(phi, psi, geom.rectA, geom.rectB, geom.rectA,
                                                   bands, {whole_b}, pathsA, so);
  int min_cross = std::numeric_limits<int>::max();
  for (const Path& path : pathsA) min_cross = std::min(min_cross, crossing_count(phi, geom.rectB, path));
  int min_cross_psi = std::numeric_limits<int>::max();
  for (const Path& path : pathsB) min_cross_psi = std::min(min_cross_psi, crossing_count(psi, geom.rectA, path));

  json payload{{"description", geom.description},
               {"phi", rep_phi.to_json()},
               {"psi", rep_psi.to_json()},
               {"composition", rep_comp.to_json()},
               {"min_crossings_phi", min_cross},
               {"min_crossings_psi", min_cross_psi}};
  write_json_file(fs::path(c.out_dir) / "stretch.json", make_report("ltm", payload, config));
  write_rect_csv(fs::path(c.out_dir) / "rect_A.csv", geom.rectA);
  write_rect_csv(fs::path(c.out_dir) / "rect_B.csv", geom.rectB);
  write_path_images_csv(fs::path(c.out_dir) / "path_images.csv", pathsA, phi);
  write_region_grid_csv(fs::path(c.out_dir) / "regions.csv", geom.rectA, bands);
  std::cout << "phi: crossing_number=" << rep_phi.crossing_number
            << " psi: crossing_number=" << rep_psi.crossing_number
            << " composition: crossing_number=" << rep_comp.crossing_number << '\n';
  const bool pass = rep_phi.crossing_number == 2 && rep_psi.all_pass() &&
                    rep_comp.crossing_number == 2;
  const bool inconclusive =
      rep_phi.any_inconclusive || rep_psi.any_inconclusive || rep_comp.any_inconclusive;
  return verdict(pass, inconclusive);
}

// ---- verify: volterra ----

struct VolterraCli {
  std::vector<double> abcd{1.0, 1.0, 1.0, 1.0};
  double mu = 0.5;
  int m1 = 2, m2 = 1;
  std::vector<double> l_offsets{0.15, 0.35};
  std::vector<double> h_offsets{0.15, 0.35};
  double r0 = -1.0, rmu = -1.0;  // < 0: choose from the thresholds
  double rel_tol = 1e-8;
};

int run_volterra(const VolterraCli& v, const CommonOpts& c) {
  fs::create_directories(c.out_dir);
  VolterraParams p;
  p.a = v.abcd[0];
  p.b = v.abcd[1];
  p.c = v.abcd[2];
  p.d = v.abcd[3];
  p.mu = v.mu;
  json config{{"command", "verify volterra"},
              {"a", p.a},
              {"b", p.b},
              {"c", p.c},
              {"d", p.d},
              {"mu", p.mu},
              {"m1", v.m1},
              {"m2", v.m2},
              {"l_offsets", v.l_offsets},
              {"h_offsets", v.h_offsets},
              {"rel_tol", v.rel_tol},
              {"n_paths", c.n_paths},
              {"n_samples", c.n_samples},
              {"seed", c.seed}};

  const auto ph0 = volterra_phase(p, false);
  const auto phm = volterra_phase(p, true);
  const double l1 = ph0.chi + v.l_offsets[0], l2 = ph0.chi + v.l_offsets[1];
  const double h1 = phm.chi + v.h_offsets[0], h2 = phm.chi + v.h_offsets[1];

  IntegratorOptions precise;  // periods and annuli
  IntegratorOptions coarse;   // long twist integrations
  coarse.rel_tol = v.rel_tol;
  coarse.abs_tol = 1e-10;

  const LinkedAnnuli annuli = linked_annuli(p, l1, l2, h1, h2, precise);
  json payload{{"chi0", ph0.chi},
               {"chi_mu", phm.chi},
               {"levels", {l1, l2, h1, h2}},
               {"order_x", v.l_offsets},
               {"linked", annuli.linked}};
  payload["order_x"] = annuli.order_x;
  if (!annuli.linked) {
    write_json_file(fs::path(c.out_dir) / "report.json", make_report("volterra", payload, config));
    std::cout << "annuli not linked for the requested levels\n";
    return kExitFail;
  }

  const double tau01 = orbit_period(ph0, l1, precise), tau02 = orbit_period(ph0, l2, precise);
  const double taum1 = orbit_period(phm, h1, precise), taum2 = orbit_period(phm, h2, precise);
  const auto [alpha, beta] = switching_thresholds(v.m1, v.m2, tau01, tau02, taum1, taum2);
  p.r0 = v.r0 > 0 ? v.r0 : 1.05 * alpha;
  p.rmu = v.rmu > 0 ? v.rmu : 1.05 * beta;
  if (p.r0 <= alpha || p.rmu <= beta) {
    std::cout << "phase durations below the twist thresholds\n";
    return kExitFail;
  }
  auto line_point = [&](double x) { return Point{x, (p.a + p.c - p.d * x) / p.b}; };
  const double twist_t =
      minimal_twist_time(ph0, line_point(annuli.order_x[1]), line_point(annuli.order_x[0]),
                         v.m1 + 1.0, 4.0 * alpha, coarse);
  payload["tau0"] = {tau01, tau02};
  payload["tau_mu"] = {taum1, taum2};
  payload["alpha"] = alpha;
  payload["beta"] = beta;
  payload["r0"] = p.r0;
  payload["r_mu"] = p.rmu;
  payload["empirical_min_twist_time"] = twist_t;

  const OrientedRectangle& r1 = *annuli.r1;
  const OrientedRectangle& r2 = *annuli.r2;
  const double dur0 = p.r0, durm = p.rmu;
  CachedFlowMap phi_cache([ph0, dur0, coarse](const Point& z) {
    return flow_with_angle(ph0, z, dur0, coarse);
  });
  CachedFlowMap psi_cache([phm, durm, coarse](const Point& z) {
    return flow_with_angle(phm, z, durm, coarse);
  });
  const PlanarMap phi = phi_cache.as_map();
  const PlanarMap psi = psi_cache.as_map();
  const auto bands = twist_bands(phi, r1, r2, phi_cache.angle_about(ph0.center), v.m1);
  const auto paths1 = sample_test_paths(r1, c.n_paths, c.n_samples, c.seed);
  const auto paths2 = sample_test_paths(r2, c.n_paths, c.n_samples, c.seed + 1);
  StretchOptions so;
  so.seed = c.seed;
  so.map_id = "psi0";
  const StretchReport rep_phi = check_stretch(phi, r1, r2, bands, paths1, so);
  RegionPredicate whole_r2{"K0", r2.contains, r2.bbox};
  so.map_id = "psi_mu";
  const StretchReport rep_psi = check_stretch(psi, r2, r1, {whole_r2}, paths2, so);
  so.map_id = "psi_mu*psi0";
  // the composite strips are roughly one turn of the twist wide, far
  // thinner than the bands, and they all sit inside the runs where phi
  // lands in R2.  Locate those runs on a moderate grid, then concentrate
  // the sampling there instead of refining the whole path uniformly.
  const int n_coarse = 1025;
  const double fine_dt = 1.0 / 16384.0;
  const auto paths1_coarse = sample_test_paths(r1, c.n_paths, n_coarse, c.seed);
  std::vector<Path> paths1_fine;
  for (const auto& base : paths1_coarse) {
    std::vector<char> hit(base.params.size(), 0);
    for (size_t k = 0; k < base.params.size(); ++k) {
      try {
        hit[k] = r2.contains(phi(base.points[k])) ? 1 : 0;
      } catch (const std::exception&) {
        hit[k] = 0;
      }
    }
    std::vector<double> ts = base.params;
    for (size_t k = 0; k < hit.size(); ++k) {
      if (!hit[k]) continue;
      size_t j = k;
      while (j + 1 < hit.size() && hit[j + 1]) ++j;
      const double lo = base.params[k > 0 ? k - 1 : 0];
      const double hi = base.params[std::min(j + 1, hit.size() - 1)];
      for (double t = lo; t < hi; t += fine_dt) ts.push_back(t);
      k = j;
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    Path fine;
    fine.eval = base.eval;
    fine.params = ts;
    fine.points.reserve(ts.size());
    for (double t : ts) fine.points.push_back(base.at(t));
    paths1_fine.push_back(std::move(fine));
  }
  StretchOptions so_comp = so;
  so_comp.refine_levels = 5;
  const StretchReport rep_comp =
      check_composition(phi, psi, r1, r2, r1, bands, {whole_r2}, paths1_fine, so_comp);
  int min_cross = std::numeric_limits<int>::max();
  for (const Path& path : paths1) min_cross = std::min(min_cross, crossing_count(phi, r2, path));

  // T-periodic solution: fixed point of the full Poincare map.  The twist
  // makes the composition violently hyperbolic, so instead of Newton on
  // psi(phi(z)) - z we exploit the conserved quantities: phi preserves the
  // free-phase energy and psi the harvesting one, which turns the fixed
  // point equation into two O(1) residuals solved by curve tracing.  The
  // composite stretch witnesses supply seeds already on the thin strips.
  const PlanarMap full = [&](const Point& z) { return psi(phi(z)); };
  auto e0 = [ph0](const Point& z) { return first_integral(ph0, z); };
  auto em = [phm](const Point& z) { return first_integral(phm, z); };
  auto full_residual = [&](const Point& z) {
    const Point w = full(z);
    return std::max(std::abs(w.x - z.x), std::abs(w.y - z.y));
  };
  PeriodicOrbitResult fp;
  fp.itinerary = {0};
  fp.method = OrbitMethod::Newton2d;
  fp.note = "energy residual curve tracing from composite witnesses";
  double fp_best = std::numeric_limits<double>::infinity();
  const double fp_tol = 1e-6;
  for (const auto& reg : rep_comp.regions) {
    if (fp.status == OrbitStatus::Found) break;
    for (const auto& w : reg.witnesses) {
      if (fp.status == OrbitStatus::Found) break;
      if (w.path_id < 0 || static_cast<size_t>(w.path_id) >= paths1_fine.size()) continue;
      const Path& path = paths1_fine[static_cast<size_t>(w.path_id)];
      const Point seed = path.at(0.5 * (w.t_lo + w.t_hi));
      std::vector<Point> cands;
      try {
        cands = switched_fixed_point_candidates(phi, psi, e0, em, seed, 2e-5, 1e-10);
      } catch (const std::exception&) {
        continue;
      }
      for (const Point& z : cands) {
        double res;
        try {
          res = full_residual(z);
        } catch (const std::exception&) {
          continue;
        }
        if (res < fp_best) {
          fp_best = res;
          fp.point = z;
          fp.residual = res;
        }
        if (res < fp_tol) {
          fp.status = OrbitStatus::Found;
          fp.itinerary_verified = r1.contains(z);
          break;
        }
      }
    }
  }
  if (fp.status != OrbitStatus::Found)
    fp.note += "; best residual " + fmt_double(fp_best);

  payload["stretch_phi"] = rep_phi.to_json();
  payload["stretch_psi"] = rep_psi.to_json();
  payload["composition"] = rep_comp.to_json();
  payload["min_crossings_phi"] = min_cross;
  payload["fixed_point"] = fp.to_json();
  write_json_file(fs::path(c.out_dir) / "report.json", make_report("volterra", payload, config));
  write_rect_csv(fs::path(c.out_dir) / "rect_R1.csv", r1);
  write_rect_csv(fs::path(c.out_dir) / "rect_R2.csv", r2);
  write_path_images_csv(fs::path(c.out_dir) / "path_images.csv", paths1, phi, 3);
  write_region_grid_csv(fs::path(c.out_dir) / "regions.csv", r1, bands);
  if (fp.status == OrbitStatus::Found) {
    SwitchingSystem sys = volterra_switched(p);
    std::ofstream os(fs::path(c.out_dir) / "poincare.csv");
    write_poincare_csv(os, sys, fp.point, 12, coarse);
  }
  std::cout << "alpha=" << fmt_double(alpha) << " beta=" << fmt_double(beta)
            << " r0=" << fmt_double(p.r0) << " r_mu=" << fmt_double(p.rmu) << '\n';
  std::cout << "phi: crossing_number=" << rep_phi.crossing_number
            << " min_crossings=" << min_cross
            << " psi: crossing_number=" << rep_psi.crossing_number
            << " composition: crossing_number=" << rep_comp.crossing_number
            << " fixed_point=" << (fp.status == OrbitStatus::Found ? "found" : "not found")
            << '\n';
  const bool pass = rep_phi.crossing_number == v.m1 && min_cross >= v.m1 &&
                    rep_psi.all_pass() && rep_comp.crossing_number == v.m1 &&
                    fp.status == OrbitStatus::Found;
  const bool inconclusive =
      rep_phi.any_inconclusive || rep_psi.any_inconclusive || rep_comp.any_inconclusive;
  return verdict(pass, inconclusive);
}

// ---- verify: duffing ----

struct DuffingCli {
  double k = 10.0, q = 4.0, s = 0.5;
  std::vector<double> eq{2.0, 4.0};
  std::vector<double> es{0.5, 1.5};
  int m = 2;
  double rel_tol = 1e-9;
};

int run_duffing(const DuffingCli& d, const CommonOpts& c) {
  fs::create_directories(c.out_dir);
  DuffingParams p;
  p.k = d.k;
  p.q = d.q;
  p.s = d.s;
  json config{{"command", "verify duffing"}, {"k", p.k},     {"q", p.q},
              {"s", p.s},                    {"eq", d.eq},   {"es", d.es},
              {"m", d.m},                    {"rel_tol", d.rel_tol},
              {"n_paths", c.n_paths},        {"n_samples", c.n_samples},
              {"seed", c.seed}};
  const auto rects = duffing_linked_rects(p, d.eq[0], d.eq[1], d.es[0], d.es[1]);
  const OrientedRectangle& r1 = rects.first;
  const OrientedRectangle& r2 = rects.second;
  const auto phq = duffing_phase_q(p);
  const auto phs = duffing_phase_s(p);
  IntegratorOptions opts;
  opts.rel_tol = d.rel_tol;

  const double tq1 = orbit_period(phq, d.eq[0], opts), tq2 = orbit_period(phq, d.eq[1], opts);
  const double alpha = (d.m + 3.5) * tq1 * tq2 / (std::max(tq1, tq2) - std::min(tq1, tq2));

  json payload{{"tau_q", {tq1, tq2}}, {"alpha", alpha}};
  json scan = json::array();
  bool certified = false;
  for (double fq : {1.02, 1.2}) {
    for (double rs : {0.3, 0.6, 1.0, 1.6, 2.4}) {
      if (certified) break;
      p.rq = fq * alpha;
      p.rs = rs;
      const double rq = p.rq;
      CachedFlowMap phi_cache(
          [phq, rq, opts](const Point& z) { return flow_with_angle(phq, z, rq, opts); });
      const PlanarMap phi = phi_cache.as_map();
      const PlanarMap psi = [phs, rs, opts](const Point& z) {
        return advance(phs.field, z, rs, opts);
      };
      json entry{{"r_q", p.rq}, {"r_s", p.rs}};
      try {
        const auto bands = twist_bands(phi, r1, r2, phi_cache.angle_about(phq.center), d.m);
        const auto quick1 = sample_test_paths(r1, 3, 129, c.seed);
        const auto quick2 = sample_test_paths(r2, 3, 129, c.seed + 1);
        int mc = std::numeric_limits<int>::max();
        for (const Path& path : quick1) mc = std::min(mc, crossing_count(phi, r2, path));
        entry["min_crossings_phi"] = mc;
        if (mc < d.m) {
          entry["result"] = "insufficient crossings";
          scan.push_back(entry);
          continue;
        }
        StretchOptions so;
        so.seed = c.seed;
        so.map_id = "psi_q";
        const auto paths1 = sample_test_paths(r1, c.n_paths, c.n_samples, c.seed);
        const auto paths2 = sample_test_paths(r2, c.n_paths, c.n_samples, c.seed + 1);
        const StretchReport rep_phi = check_stretch(phi, r1, r2, bands, paths1, so);
        RegionPredicate whole_r2{"K0", r2.contains, r2.bbox};
        so.map_id = "psi_s";
        const StretchReport rep_psi = check_stretch(psi, r2, r1, {whole_r2}, paths2, so);
        so.map_id = "psi_s*psi_q";
        const StretchReport rep_comp =
            check_composition(phi, psi, r1, r2, r1, bands, {whole_r2}, paths1, so);
        entry["phi_crossing_number"] = rep_phi.crossing_number;
        entry["psi_crossing_number"] = rep_psi.crossing_number;
        entry["composition_crossing_number"] = rep_comp.crossing_number;
        if (rep_phi.crossing_number == d.m && rep_psi.all_pass() &&
            rep_comp.crossing_number == d.m && !rep_phi.any_inconclusive &&
            !rep_psi.any_inconclusive && !rep_comp.any_inconclusive) {
          certified = true;
          entry["result"] = "certified";
          payload["certified_pair"] = {{"r_q", p.rq}, {"r_s", p.rs}};
          payload["stretch_phi"] = rep_phi.to_json();
          payload["stretch_psi"] = rep_psi.to_json();
          payload["composition"] = rep_comp.to_json();
          write_rect_csv(fs::path(c.out_dir) / "rect_R1.csv", r1);
          write_rect_csv(fs::path(c.out_dir) / "rect_R2.csv", r2);
          write_path_images_csv(fs::path(c.out_dir) / "path_images.csv", paths1, phi, 3);
          write_region_grid_csv(fs::path(c.out_dir) / "regions.csv", r1, bands);
        } else {
          entry["result"] = "stretch incomplete";
        }
      } catch (const std::exception& e) {
        entry["result"] = std::string("error: ") + e.what();
      }
      scan.push_back(entry);
    }
    if (certified) break;
  }
  payload["scan"] = scan;
  write_json_file(fs::path(c.out_dir) / "report.json", make_report("duffing", payload, config));
  std::cout << "scan " << (certified ? "certified m=2 stretching" : "found no certifying pair")
            << '\n';
  return certified ? kExitPass : kExitFail;
}

// ---- entropy / orbit / itinerary / cutcheck ----

int run_entropy(const std::string& file, const CommonOpts& c) {
  SymbolMatrix m;
  try {
    std::ifstream is(file);
    if (!is) throw std::runtime_error("cannot open " + file);
    m = read_matrix(is);
  } catch (const std::exception& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitParse;
  }
  const PerronResult pr = perron_eigenvalue(m);
  json payload{{"n", m.n},
               {"eigenvalue", pr.eigenvalue},
               {"entropy", entropy_lower_bound(m)},
               {"irreducible", is_irreducible(m)},
               {"permutation", m.is_permutation()},
               {"iterations", pr.iterations}};
  json words = json::array();
  for (int n = 1; n <= 12; ++n) words.push_back(count_admissible_words(m, n).str());
  payload["admissible_words"] = words;
  const json rep = make_report("entropy", payload, json{{"command", "entropy"}, {"file", file}});
  std::cout << rep.dump(2) << '\n';
  fs::create_directories(c.out_dir);
  write_json_file(fs::path(c.out_dir) / "entropy.json", rep);
  return kExitPass;
}

int run_orbit(double mu, const std::string& word_str, const CommonOpts& c) {
  fs::create_directories(c.out_dir);
  json config{{"command", "orbit logistic"},
              {"mu", mu},
              {"itinerary", word_str},
              {"max_period", c.max_period},
              {"seed", c.seed}};
  const IntervalMap f = [mu](double x) { return mu * x * (1.0 - x); };
  const auto intervals = logistic_covering_intervals(mu);
  if (!word_str.empty()) {
    const auto word = parse_word(word_str, static_cast<int>(intervals.size()));
    const PeriodicOrbitResult res = covering_periodic_point_1d(f, intervals, word);
    write_json_file(fs::path(c.out_dir) / "orbit.json",
                    make_report("orbit", res.to_json(), config));
    std::ofstream os(fs::path(c.out_dir) / "orbit.csv");
    os << "i,x,symbol\n";
    double x = res.point.x;
    for (size_t i = 0; i < word.size(); ++i) {
      os << i << ',' << fmt_double(x) << ',' << word[i] << '\n';
      x = f(x);
    }
    std::cout << "orbit " << (res.status == OrbitStatus::Found ? "found" : "not found")
              << " residual=" << fmt_double(res.residual) << '\n';
    return res.status == OrbitStatus::Found ? kExitPass : kExitFail;
  }
  const ChaosCertificate cert =
      chaos_certificate_interval(f, intervals, c.max_period, c.n_paths, c.n_samples, c.seed);
  write_json_file(fs::path(c.out_dir) / "certificate.json",
                  make_report("chaos-certificate", cert.to_json(), config));
  std::ofstream os(fs::path(c.out_dir) / "orbits.csv");
  cert.write_orbits_csv(os);
  std::cout << "orbits=" << (cert.orbits.size() - cert.failures) << "/" << cert.orbits.size()
            << '\n';
  return verdict(cert.pass, cert.stretch.any_inconclusive);
}

int run_itinerary(double mu, double x0, int n, const CommonOpts& c) {
  fs::create_directories(c.out_dir);
  json config{{"command", "itinerary logistic"}, {"mu", mu}, {"x0", x0}, {"n", n}};
  const auto intervals = logistic_covering_intervals(mu);
  std::vector<RegionPredicate> regions;
  for (size_t i = 0; i < intervals.size(); ++i) {
    const Interval iv = intervals[i];
    regions.push_back({"I" + std::to_string(i),
                       [iv](const Point& z) { return z.x >= iv.lo && z.x <= iv.hi; },
                       Box{iv.lo, iv.hi, 0.0, 1.0}});
  }
  const PlanarMap map = [mu](const Point& z) { return Point{mu * z.x * (1.0 - z.x), z.y}; };
  const Itinerary it = itinerary(map, regions, Point{x0, 0.5}, n);
  json payload{{"symbols", it.symbols}};
  if (it.failure_index) payload["failure_index"] = *it.failure_index;
  write_json_file(fs::path(c.out_dir) / "itinerary.json", make_report("itinerary", payload, config));
  std::string w;
  for (int s : it.symbols) w += static_cast<char>('0' + s);
  if (it.failure_index)
    std::cout << w << " (left the regions at step " << *it.failure_index << ")\n";
  else
    std::cout << w << '\n';
  return kExitPass;
}

int run_cutcheck(const std::string& file, const std::string& dir_name) {
  GridMask mask;
  try {
    std::ifstream is(file);
    if (!is) throw std::runtime_error("cannot open " + file);
    mask = read_pbm(is);
  } catch (const std::exception& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitParse;
  }
  const CutDirection dir =
      dir_name == "downup" ? CutDirection::DownUp : CutDirection::LeftRight;
  const bool cuts = grid_cut_check(mask, dir);
  std::cout << (cuts ? "CUTS" : "DOES NOT CUT") << '\n';
  const auto span = grid_spanning_continuum(
      mask, dir == CutDirection::LeftRight ? CutDirection::DownUp : CutDirection::LeftRight);
  std::cout << "spanning continuum: " << (span ? "present" : "absent") << '\n';
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical verification of stretching-along-paths chaos"};
  app.require_subcommand(1);

  CommonOpts c;

  auto* verify = app.add_subcommand("verify", "run a model verification pipeline");
  verify->require_subcommand(1);

  Olg2dParams olg;
  double olg_k = 6.0;
  auto* v_olg = verify->add_subcommand("olg2d", "planar overlapping-generations map");
  v_olg->add_option("--mu", olg.mu);
  v_olg->add_option("--b", olg.b);
  v_olg->add_option("--beta", olg.beta);
  v_olg->add_option("--K", olg_k);
  add_common(v_olg, c);

  DuopolyParams duo;
  auto* v_duo = verify->add_subcommand("duopoly", "Cournot duopoly map");
  v_duo->add_option("--a", duo.a);
  v_duo->add_option("--b", duo.b);
  v_duo->add_option("--c1", duo.c1);
  v_duo->add_option("--c2", duo.c2);
  v_duo->add_option("--alpha", duo.alpha);
  v_duo->add_option("--nu", duo.nu);
  add_common(v_duo, c);

  double log_mu = 4.5, log_delta = 0.01;
  auto* v_log = verify->add_subcommand("logistic", "logistic interval map");
  v_log->add_option("--mu", log_mu);
  v_log->add_option("--delta", log_delta, "window margin for the second-iterate construction");
  add_common(v_log, c);

  Twist1Params t1;
  auto* v_ltm1 = verify->add_subcommand("ltm1", "linked twist map on two annuli");
  v_ltm1->add_option("--r", t1.r);
  v_ltm1->add_option("--p1", t1.p1);
  v_ltm1->add_option("--p2", t1.p2);
  v_ltm1->add_option("--q1", t1.q1);
  v_ltm1->add_option("--q2", t1.q2);
  v_ltm1->add_option("--c1", t1.c1);
  v_ltm1->add_option("--d1", t1.d1);
  v_ltm1->add_option("--c2", t1.c2);
  v_ltm1->add_option("--d2", t1.d2);
  add_common(v_ltm1, c);

  Twist2Params t2;
  auto* v_ltm2 = verify->add_subcommand("ltm2", "linked twist map on annulus and strip");
  v_ltm2->add_option("--p1", t2.p1);
  v_ltm2->add_option("--p2", t2.p2);
  v_ltm2->add_option("--q1", t2.q1);
  v_ltm2->add_option("--q2", t2.q2);
  v_ltm2->add_option("--c1", t2.c1);
  v_ltm2->add_option("--d1", t2.d1);
  v_ltm2->add_option("--c2", t2.c2);
  v_ltm2->add_option("--d2", t2.d2);
  add_common(v_ltm2, c);

  VolterraCli vol;
  auto* v_vol = verify->add_subcommand("volterra", "switched predator-prey system");
  v_vol->add_option("--abcd", vol.abcd, "rates a,b,c,d")->delimiter(',')->expected(4);
  v_vol->add_option("--mu", vol.mu);
  v_vol->add_option("--m1", vol.m1);
  v_vol->add_option("--m2", vol.m2);
  v_vol->add_option("--l-offsets", vol.l_offsets)->delimiter(',')->expected(2);
  v_vol->add_option("--h-offsets", vol.h_offsets)->delimiter(',')->expected(2);
  v_vol->add_option("--r0", vol.r0, "free-phase duration (default: just above alpha)");
  v_vol->add_option("--rmu", vol.rmu, "harvesting-phase duration (default: just above beta)");
  v_vol->add_flag("--auto-times", "choose phase durations from the thresholds (default)");
  v_vol->add_option("--rel-tol", vol.rel_tol);
  add_common(v_vol, c);
  c.n_paths = 25;  // defaults; volterra overrides below

  DuffingCli duf;
  auto* v_duf = verify->add_subcommand("duffing", "piecewise-forced oscillator");
  v_duf->add_option("--k", duf.k);
  v_duf->add_option("--q", duf.q);
  v_duf->add_option("--s", duf.s);
  v_duf->add_option("--eq", duf.eq)->delimiter(',')->expected(2);
  v_duf->add_option("--es", duf.es)->delimiter(',')->expected(2);
  v_duf->add_option("--m", duf.m);
  v_duf->add_option("--rel-tol", duf.rel_tol);
  add_common(v_duf, c);

  std::string matrix_file;
  auto* ent = app.add_subcommand("entropy", "Perron eigenvalue and entropy of a transition matrix");
  ent->add_option("file", matrix_file)->required();
  ent->add_option("--out", c.out_dir);

  auto* orb = app.add_subcommand("orbit", "periodic orbits of an interval map");
  auto* orb_log = orb->add_subcommand("logistic", "");
  double orb_mu = 4.5;
  std::string orb_word;
  orb_log->add_option("--mu", orb_mu);
  orb_log->add_option("--itinerary", orb_word);
  add_common(orb_log, c);

  auto* iti = app.add_subcommand("itinerary", "symbol sequence of an orbit");
  auto* iti_log = iti->add_subcommand("logistic", "");
  double iti_mu = 4.5, iti_x0 = 0.3;
  int iti_n = 20;
  iti_log->add_option("--mu", iti_mu);
  iti_log->add_option("--x0", iti_x0);
  iti_log->add_option("--n", iti_n);
  iti_log->add_option("--out", c.out_dir);

  std::string mask_file, cut_dir = "leftright";
  auto* cut = app.add_subcommand("cutcheck", "cutting property of a grid mask");
  cut->add_option("file", mask_file)->required();
  cut->add_option("--direction", cut_dir)->check(CLI::IsMember({"leftright", "downup"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (v_olg->parsed()) return run_olg2d(olg, olg_k, c);
    if (v_duo->parsed()) return run_duopoly(duo, c);
    if (v_log->parsed()) return run_logistic(log_mu, log_delta, c);
    if (v_ltm1->parsed()) return run_ltm(1, t1, t2, c);
    if (v_ltm2->parsed()) return run_ltm(2, t1, t2, c);
    if (v_vol->parsed()) {
      if (!v_vol->count("--n-paths")) c.n_paths = 6;
      if (!v_vol->count("--n-samples")) c.n_samples = 129;
      return run_volterra(vol, c);
    }
    if (v_duf->parsed()) {
      if (!v_duf->count("--n-paths")) c.n_paths = 8;
      if (!v_duf->count("--n-samples")) c.n_samples = 129;
      return run_duffing(duf, c);
    }
    if (ent->parsed()) return run_entropy(matrix_file, c);
    if (orb_log->parsed()) return run_orbit(orb_mu, orb_word, c);
    if (iti_log->parsed()) return run_itinerary(iti_mu, iti_x0, iti_n, c);
    if (cut->parsed()) return run_cutcheck(mask_file, cut_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  std::cerr << "no command selected\n";
  return kExitUsage;
}
