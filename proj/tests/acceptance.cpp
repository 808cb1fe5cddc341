// End-to-end acceptance run: one line per criterion, fixed tolerances.
// Usage: acceptance <path-to-stretch-chaos-cli> [work-dir]

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <stretchchaos/flows.hpp>
#include <stretchchaos/geometry.hpp>
#include <stretchchaos/models.hpp>
#include <stretchchaos/orbits.hpp>
#include <stretchchaos/stretching.hpp>
#include <stretchchaos/symdyn.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sc;

namespace {

std::string g_cli;
fs::path g_work;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_cli(const std::string& args, const std::string& log_name) {
  const fs::path log = g_work / log_name;
  const std::string cmd = g_cli + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc < 0) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json load_json(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("missing " + p.string());
  json j;
  is >> j;
  return j;
}

double num(const json& j) {
  return j.is_string() ? std::stod(j.get<std::string>()) : j.get<double>();
}

// same reference as the unit tests: empty-corridor flood fill on the
// complement decides whether the occupied cells cut the grid
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

OrientedRectangle unit_square() {
  return make_rect_from_graphs(
      "sq", [](double) { return 0.0; }, [](double) { return 1.0; }, 0.0, 1.0);
}

// ---- criteria ----

bool c01_golden_mean(std::string& detail) {
  const auto m = SymbolMatrix::from_rows({{0, 1}, {1, 1}});
  double best = 1e9;
  PerronResult pr;
  for (int rep = 0; rep < 3; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    pr = perron_eigenvalue(m);
    best = std::min(best, seconds_since(t0));
  }
  const double golden = 0.5 * (1.0 + std::sqrt(5.0));
  const double err = std::abs(std::log(pr.eigenvalue) - std::log(golden));
  std::ostringstream os;
  os << "entropy err " << err << ", " << best * 1e3 << " ms";
  detail = os.str();
  return err < 1e-10 && best < 1e-3;
}

bool c02_full_shift(std::string& detail) {
  const double h2 = entropy_lower_bound(SymbolMatrix::from_rows({{1, 1}, {1, 1}}));
  const double hp = entropy_lower_bound(SymbolMatrix::from_rows({{0, 1}, {1, 0}}));
  std::ostringstream os;
  os << "log2 err " << std::abs(h2 - std::log(2.0)) << ", permutation " << hp;
  detail = os.str();
  return std::abs(h2 - std::log(2.0)) < 1e-12 && hp == 0.0;
}

bool c03_logistic_45(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const double mu = 4.5;
  const IntervalMap f = [mu](double x) { return mu * x * (1.0 - x); };
  const auto cert = chaos_certificate_interval(f, logistic_covering_intervals(mu), 8);
  const double elapsed = seconds_since(t0);
  const size_t expected = primitive_cyclic_words(2, 8).size();
  double worst = 0.0;
  size_t found = 0;
  for (const auto& o : cert.orbits)
    if (o.status == OrbitStatus::Found) {
      ++found;
      worst = std::max(worst, o.residual);
    }
  std::ostringstream os;
  os << "crossing " << cert.stretch.crossing_number << ", orbits " << found << "/" << expected
     << ", worst residual " << worst << ", " << elapsed << " s";
  detail = os.str();
  return cert.pass && cert.stretch.crossing_number == 2 && found == expected &&
         worst < 1e-12 && elapsed < 5.0;
}

bool c04_logistic_388(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const double mu = 3.88;
  const auto cover = logistic_second_iterate_cover(mu);
  const IntervalMap f = [mu](double x) { return mu * x * (1.0 - x); };
  const IntervalMap f2 = [f](double x) { return f(f(x)); };

  // each branch of the second iterate maps onto the full window
  bool covers = true;
  for (const auto& br : cover.branches) {
    const double lo = std::min(f2(br.lo), f2(br.hi));
    const double hi = std::max(f2(br.lo), f2(br.hi));
    covers = covers && lo <= cover.window.lo + 1e-12 && hi >= cover.window.hi - 1e-12;
  }
  const auto cert = chaos_certificate_interval(f2, cover.branches, 3);
  const double elapsed = seconds_since(t0);
  const double h_map = 0.5 * cert.entropy_bound;
  std::ostringstream os;
  os << "covers " << covers << ", h(F^2) " << cert.entropy_bound << ", h(F) " << h_map << ", "
     << elapsed << " s";
  detail = os.str();
  return covers && cert.pass && std::abs(cert.entropy_bound - std::log(2.0)) < 1e-9 &&
         h_map >= std::log(std::sqrt(2.0)) - 1e-9 && elapsed < 10.0;
}

bool c05_olg(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  Olg2dParams p;
  p.mu = 80.0;
  p.b = 2.0;
  p.beta = 1.3;
  const auto cond = olg_conditions(p, 6.0);
  const double m_err = std::abs(p.M() - 13.48474370);

  const fs::path out = g_work / "olg";
  const int rc = run_cli("verify olg2d --n-paths 200 --out " + out.string(), "olg.log");
  const double elapsed = seconds_since(t0);
  bool both_regions = false;
  double worst = 1e9;
  if (rc == 0) {
    const json cert = load_json(out / "certificate.json")["result"];
    bool r0 = false, r1 = false;
    worst = 0.0;
    for (const auto& o : cert["orbits"]) {
      if (o["status"] != "found") continue;
      worst = std::max(worst, num(o["residual"]));
      if (o["itinerary"] == "0") r0 = true;
      if (o["itinerary"] == "1") r1 = true;
    }
    both_regions = r0 && r1;
  }
  std::ostringstream os;
  os << "M err " << m_err << ", exit " << rc << ", worst residual " << worst << ", " << elapsed
     << " s";
  detail = os.str();
  return cond.overall == Overall::HoldsStrict && m_err < 5e-9 && rc == 0 && both_regions &&
         worst < 1e-9 && elapsed < 30.0;
}

bool c06_duopoly(std::string& detail) {
  DuopolyParams p;  // alpha defaults to 26/27
  const auto cond = duopoly_conditions(p);
  const double margin0 = cond.conditions.empty() ? 1e9 : std::abs(cond.conditions[0].margin);
  const int rc_boundary =
      run_cli("verify duopoly --out " + (g_work / "duo_b").string(), "duo_b.log");

  const int rc_pass = run_cli("verify duopoly --alpha 1.05 --max-period 4 --out " +
                                  (g_work / "duo_p").string(),
                              "duo_p.log");
  bool orbits_ok = false;
  double worst = 1e9;
  int max_len = 0;
  if (rc_pass == 0) {
    const json cert = load_json(g_work / "duo_p" / "certificate.json")["result"];
    orbits_ok = true;
    worst = 0.0;
    for (const auto& o : cert["orbits"]) {
      orbits_ok = orbits_ok && o["status"] == "found";
      worst = std::max(worst, num(o["residual"]));
      max_len = std::max(max_len, static_cast<int>(o["itinerary"].get<std::string>().size()));
    }
  }
  std::ostringstream os;
  os << "boundary margin " << margin0 << ", exits " << rc_boundary << "/" << rc_pass
     << ", worst residual " << worst << ", max period " << max_len;
  detail = os.str();
  return cond.overall == Overall::Boundary && margin0 < 1e-12 && rc_boundary == 2 &&
         rc_pass == 0 && orbits_ok && max_len == 4 && worst < 1e-9;
}

bool c07_volterra(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  VolterraParams p;  // a = b = c = d = 1, mu = 0.5

  const auto ph0 = volterra_phase(p, false);
  IntegratorOptions tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  const double level = ph0.chi + 0.25;
  const double tau = orbit_period(ph0, level, tight);
  double drift = 0.0;
  {
    const Point start{2.0, 1.0};
    const double e0 = first_integral(ph0, start);
    const auto traj = integrate(ph0.field, start, 0.0, tau, tight);
    for (int i = 0; i <= 50; ++i)
      drift = std::max(drift,
                       std::abs(first_integral(ph0, traj.at(tau * i / 50.0)) - e0));
  }
  const double tau_small = orbit_period(ph0, ph0.chi + 1e-3, tight);
  const double period_rel = std::abs(tau_small - 2.0 * std::numbers::pi) /
                            (2.0 * std::numbers::pi);

  const fs::path out = g_work / "volterra";
  const int rc = run_cli("verify volterra --out " + out.string(), "volterra.log");
  const double elapsed = seconds_since(t0);

  bool linked = false, fp_found = false;
  int min_cross = 0, comp_cross = 0;
  double fp_residual = 1e9;
  try {
    const json r = load_json(out / "report.json")["result"];
    linked = r["linked"].get<bool>();
    if (r.contains("min_crossings_phi")) min_cross = r["min_crossings_phi"].get<int>();
    if (r.contains("composition"))
      comp_cross = r["composition"]["crossing_number"].get<int>();
    if (r.contains("fixed_point")) {
      fp_found = r["fixed_point"]["status"] == "found";
      fp_residual = num(r["fixed_point"]["residual"]);
    }
  } catch (const std::exception&) {
  }
  std::ostringstream os;
  os << "drift " << drift << ", period rel err " << period_rel << ", exit " << rc
     << ", min crossings " << min_cross << ", fp residual " << fp_residual << ", " << elapsed
     << " s";
  detail = os.str();
  return drift < 1e-8 && period_rel < 0.005 && rc == 0 && linked && min_cross >= 2 &&
         comp_cross == 2 && fp_found && fp_residual < 1e-6 && elapsed < 120.0;
}

bool c08_duffing(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  DuffingParams p;  // k = 10, q = 4, s = 0.5

  IntegratorOptions tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  double drift = 0.0;
  for (const auto& ph : {duffing_phase_q(p), duffing_phase_s(p)}) {
    const Point start{-1.2, 0.4};
    const double e0 = first_integral(ph, start);
    const auto traj = integrate(ph.field, start, 0.0, 3.0, tight);
    for (int i = 0; i <= 60; ++i)
      drift = std::max(drift, std::abs(first_integral(ph, traj.at(0.05 * i)) - e0));
  }

  const auto [r1, r2] = duffing_linked_rects(p, 2.0, 4.0, 0.5, 1.5);
  const auto phq = duffing_phase_q(p);
  const auto phs = duffing_phase_s(p);
  double corner_err = 0.0;
  for (const auto& r : {r1, r2})
    for (double u : {0.0, 1.0})
      for (double v : {0.0, 1.0}) {
        const Point z = r.param(u, v);
        const double eq = std::min(std::abs(first_integral(phq, z) - 2.0),
                                   std::abs(first_integral(phq, z) - 4.0));
        const double es = std::min(std::abs(first_integral(phs, z) - 0.5),
                                   std::abs(first_integral(phs, z) - 1.5));
        corner_err = std::max({corner_err, eq, es});
      }

  const fs::path out = g_work / "duffing";
  const int rc = run_cli("verify duffing --out " + out.string(), "duffing.log");
  const double elapsed = seconds_since(t0);
  bool certified = false;
  try {
    const json r = load_json(out / "report.json")["result"];
    certified = r.contains("certified_pair");
  } catch (const std::exception&) {
  }
  std::ostringstream os;
  os << "drift " << drift << ", corner err " << corner_err << ", exit " << rc << ", " << elapsed
     << " s";
  detail = os.str();
  return drift < 1e-8 && corner_err < 1e-9 && rc == 0 && certified && elapsed < 120.0;
}

bool c09_ltm(std::string& detail) {
  std::ostringstream os;
  bool ok = true;
  for (int ex : {1, 2}) {
    const fs::path out = g_work / ("ltm" + std::to_string(ex));
    const int rc = run_cli("verify ltm" + std::to_string(ex) + " --out " + out.string(),
                           "ltm" + std::to_string(ex) + ".log");
    int phi = -1, psi = -1, comp = -1;
    if (rc == 0) {
      const json r = load_json(out / "stretch.json")["result"];
      phi = r["phi"]["crossing_number"].get<int>();
      psi = r["psi"]["crossing_number"].get<int>();
      comp = r["composition"]["crossing_number"].get<int>();
    }
    ok = ok && rc == 0 && phi == 2 && psi == 1 && comp == 2;
    os << "ltm" << ex << " exit " << rc << " phi/psi/comp " << phi << "/" << psi << "/" << comp
       << (ex == 1 ? ", " : "");
  }
  detail = os.str();
  return ok;
}

bool c10_negative_controls(std::string& detail) {
  const auto sq = unit_square();
  const auto paths = sample_test_paths(sq, 10, 257, 9);

  const CounterexampleParams cp;
  const PlanarMap embedded = [cp](const Point& z) {
    return Point{eval_counterexample(cp, z.x), z.y};
  };
  const RegionPredicate k0{"K0",
                           [cp](const Point& z) {
                             return z.x >= cp.a && z.x <= cp.b && z.y >= 0.0 && z.y <= 1.0;
                           },
                           {cp.a, cp.b, 0.0, 1.0}};
  const RegionPredicate k1{"K1",
                           [cp](const Point& z) {
                             return ((z.x >= 0.0 && z.x <= cp.a) ||
                                     (z.x >= cp.b && z.x <= 1.0)) &&
                                    z.y >= 0.0 && z.y <= 1.0;
                           },
                           {0.0, 1.0, 0.0, 1.0}};
  const auto rep_k0 = check_stretch(embedded, sq, sq, {k0}, paths, {});
  const auto rep_k1 = check_stretch(embedded, sq, sq, {k1}, paths, {});

  // affine map crossing a re-oriented copy of the square: stretching holds
  // but the fixed point sits outside, so the finder must say not-found
  const PlanarMap slab = [](const Point& z) {
    return Point{0.5 + 0.2 * (z.y - 0.5), -0.5 + 3.0 * z.x};
  };
  const auto reoriented = make_oriented_rectangle(
      "sq_v", [](double u, double v) { return Point{v, u}; },
      [](const Point& z) { return z.x >= 0 && z.x <= 1 && z.y >= 0 && z.y <= 1; }, SideAxis::U,
      257);
  const RegionPredicate whole{"K0", sq.contains, sq.bbox};
  const auto rep_slab = check_stretch(slab, sq, reoriented, {whole}, paths, {});
  const auto fp = newton_periodic_point_2d(slab, {whole}, {0}, {});

  std::ostringstream os;
  os << "K0 crossing " << rep_k0.crossing_number << ", K1 crossing " << rep_k1.crossing_number
     << ", slab crossing " << rep_slab.crossing_number << ", fp "
     << (fp.status == OrbitStatus::Found ? "found" : "not found");
  detail = os.str();
  return rep_k0.crossing_number == 1 && rep_k1.crossing_number == 0 &&
         rep_slab.crossing_number == 1 && fp.status == OrbitStatus::NotFound;
}

bool c11_grid_cut(std::string& detail) {
  int checked = 0, agreed = 0, span_ok = 0;
  auto compare = [&](const GridMask& m) {
    for (CutDirection dir : {CutDirection::LeftRight, CutDirection::DownUp}) {
      ++checked;
      const bool cut = grid_cut_check(m, dir);
      if (cut == flood_fill_cut(m, dir)) ++agreed;
      if (cut == grid_spanning_continuum(m, dir).has_value()) ++span_ok;
    }
  };
  for (unsigned bits = 0; bits < 512; ++bits) {
    GridMask m = GridMask::empty(3, 3);
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i)
        if (bits & (1u << (j * 3 + i))) m.set(i, j, true);
    compare(m);
  }
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const double density = 0.3 + 0.4 * (trial % 10) / 9.0;
    GridMask m = GridMask::empty(64, 64);
    std::bernoulli_distribution cell(density);
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 64; ++i) m.set(i, j, cell(rng));
    compare(m);
  }
  std::ostringstream os;
  os << agreed << "/" << checked << " oracle, " << span_ok << "/" << checked << " continuum";
  detail = os.str();
  return agreed == checked && span_ok == checked;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <stretch-chaos-cli> [work-dir]\n";
    return 2;
  }
  g_cli = argv[1];
  g_work = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "sc_acceptance";
  fs::create_directories(g_work);

  struct Criterion {
    const char* name;
    bool (*fn)(std::string&);
  };
  const std::vector<Criterion> criteria{
      {"golden-mean entropy", c01_golden_mean},
      {"full-shift and permutation entropy", c02_full_shift},
      {"logistic mu=4.5 certificate to period 8", c03_logistic_45},
      {"logistic mu=3.88 second-iterate bound", c04_logistic_388},
      {"olg2d conditions, stretch, fixed points", c05_olg},
      {"duopoly boundary and certified pipeline", c06_duopoly},
      {"volterra switched system certificate", c07_volterra},
      {"duffing switched system scan", c08_duffing},
      {"linked twist map crossings", c09_ltm},
      {"negative controls", c10_negative_controls},
      {"grid cut vs flood fill", c11_grid_cut},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    std::string detail;
    bool ok = false;
    try {
      ok = criteria[i].fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::cout << "criterion " << (i + 1 < 10 ? " " : "") << i + 1 << " [" << criteria[i].name
              << "]: " << (ok ? "pass" : "FAIL") << " (" << detail << ")" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
