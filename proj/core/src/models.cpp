#include "stretchchaos/models.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <limits>
#include <map>
#include <sstream>

#include "stretchchaos/parallel.hpp"
#include "stretchchaos/report.hpp"

namespace sc {

namespace {
constexpr double kPi = 3.14159265358979323846;

double domain_eps(double scale) { return 1e-12 * std::max(1.0, std::abs(scale)); }
}  // namespace

double Olg2dParams::g(double x) const {
  if (x < 0.0) throw MapDomainError("olg2d: g requires x >= 0");
  if (x == 0.0) return 0.0;
  return std::pow(mu * x * std::exp(-x), 1.0 / beta);
}

double eval_logistic(const LogisticParams& p, double x) { return p.mu * x * (1.0 - x); }

double eval_olg1d(const Olg1dParams& p, double x) {
  if (x < 0.0) throw MapDomainError("olg1d: x >= 0 required");
  return p.mu * x * std::exp(-x);
}

Point eval_olg2d(const Olg2dParams& p, const Point& z) {
  if (z.x < -domain_eps(z.x) || z.y < -domain_eps(z.y))
    throw MapDomainError("olg2d: first quadrant required");
  const double gx = p.g(std::max(z.x, 0.0));
  return {gx - z.y / p.b, gx};
}

Point eval_duopoly(const DuopolyParams& p, const Point& z) {
  if (z.x < -domain_eps(z.x) || z.y < -domain_eps(z.y))
    throw MapDomainError("duopoly: first quadrant required");
  const double f1 =
      z.x * (1.0 + p.alpha * p.a - p.alpha * p.b * z.y - p.alpha * p.c1 - 2.0 * p.alpha * p.b * z.x);
  const double f2 = (1.0 - p.nu) * z.y + (p.nu / (2.0 * p.b)) * (p.a - p.c2 - p.b * z.x);
  return {f1, f2};
}

namespace {

Point twist_about(const Point& z, const Point& centre, double c, double d) {
  const std::complex<double> w(z.x - centre.x, z.y - centre.y);
  const double rho = std::abs(w);
  const std::complex<double> out = w * std::exp(std::complex<double>(0.0, c + d * rho));
  return {centre.x + out.real(), centre.y + out.imag()};
}

// Pr_[a,b](t): ramp from 0 to 1 across [a,b]
double ramp(double a, double b, double t) {
  return std::min(b - a, std::max(0.0, t - a)) / (b - a);
}

}  // namespace

Point eval_twist1_phi(const Twist1Params& p, const Point& z) {
  return twist_about(z, {-p.r, 0.0}, p.c1, p.d1);
}

Point eval_twist1_psi(const Twist1Params& p, const Point& z) {
  return twist_about(z, {p.r, 0.0}, p.c2, p.d2);
}

Point eval_twist2_phi(const Twist2Params& p, const Point& z) {
  const double rho = std::hypot(z.x, z.y);
  const double f = p.c1 + p.d1 * ramp(p.p1, p.p2, rho);
  const std::complex<double> out =
      std::complex<double>(z.x, z.y) * std::exp(std::complex<double>(0.0, f));
  return {out.real(), out.imag()};
}

Point eval_twist2_psi(const Twist2Params& p, const Point& z) {
  const double g = p.c2 + p.d2 * ramp(p.q1, p.q2, z.y);
  return {z.x + g, z.y};
}

double eval_counterexample(const CounterexampleParams& p, double s) {
  if (s < 0.0 || s > 1.0) throw MapDomainError("counterexample: s in [0,1] required");
  if (s < p.a) return (1.0 - p.c) / p.a * s + p.c;
  if (s <= p.b) return (s - p.b) / (p.a - p.b);
  return p.d * (s - p.b) / (1.0 - p.b);
}

const char* overall_name(Overall o) {
  switch (o) {
    case Overall::HoldsStrict: return "holds_strict";
    case Overall::Boundary: return "boundary";
    default: return "fails";
  }
}

nlohmann::json ConditionReport::to_json() const {
  nlohmann::json j;
  j["overall"] = overall_name(overall);
  j["conditions"] = nlohmann::json::array();
  for (const auto& c : conditions) {
    j["conditions"].push_back({{"name", c.name},
                               {"lhs", fmt_double(c.lhs)},
                               {"rhs", fmt_double(c.rhs)},
                               {"relation", c.relation},
                               {"margin", fmt_double(c.margin)},
                               {"strict", c.strict},
                               {"holds", c.holds}});
  }
  return j;
}

namespace {

Condition make_condition(std::string name, double lhs, const std::string& rel, double rhs) {
  Condition c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.relation = rel;
  c.strict = (rel == "<" || rel == ">");
  c.margin = (rel == "<" || rel == "<=") ? rhs - lhs : lhs - rhs;
  const double tol = 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
  c.holds = c.strict ? c.margin > tol : c.margin > -tol;
  return c;
}

Overall classify(const std::vector<Condition>& cs) {
  bool boundary = false;
  for (const auto& c : cs) {
    const double tol = 1e-12 * std::max({1.0, std::abs(c.lhs), std::abs(c.rhs)});
    if (c.margin < -tol) return Overall::Fails;
    if (std::abs(c.margin) <= tol) boundary = true;
  }
  return boundary ? Overall::Boundary : Overall::HoldsStrict;
}

}  // namespace

ConditionReport olg_conditions(const Olg2dParams& p, double K) {
  if (!(p.mu > 0 && p.b > 1 && p.beta > 1))
    throw std::invalid_argument("olg_conditions: require mu>0, b>1, beta>1");
  if (!(K > 0)) throw std::invalid_argument("olg_conditions: require K>0");
  ConditionReport r;
  const double M = p.M();
  r.conditions.push_back(make_condition("b*g(K) <= K", p.b * p.g(K), "<=", K));
  r.conditions.push_back(make_condition("K < M*(1-1/b)", K, "<", M * (1.0 - 1.0 / p.b)));
  r.conditions.push_back(make_condition("K > x_bar", K, ">", p.x_bar()));
  r.overall = classify(r.conditions);
  return r;
}

ConditionReport duopoly_conditions(const DuopolyParams& p) {
  if (!(p.a > 0 && p.b > 0 && p.c1 > 0 && p.c2 > 0 && p.alpha > 0 && p.nu >= 0 && p.nu <= 1))
    throw std::invalid_argument("duopoly_conditions: invalid parameters");
  ConditionReport r;
  r.conditions.push_back(
      make_condition("a-2c1+c2 > 26/(3 alpha)", p.a - 2 * p.c1 + p.c2, ">", 26.0 / (3.0 * p.alpha)));
  r.conditions.push_back(
      make_condition("a+c1-2c2-1/alpha >= 0", p.a + p.c1 - 2 * p.c2 - 1.0 / p.alpha, ">=", 0.0));
  r.conditions.push_back(make_condition("0 <= P", 0.0, "<=", p.P()));
  r.conditions.push_back(make_condition("P < Q", p.P(), "<", p.Q()));
  r.conditions.push_back(
      make_condition("Q < (a-c1+1/alpha)/b", p.Q(), "<", (p.a - p.c1 + 1.0 / p.alpha) / p.b));
  r.overall = classify(r.conditions);
  return r;
}

OlgGeometry olg_geometry(const Olg2dParams& p, double K) {
  const auto cond = olg_conditions(p, K);
  if (cond.overall == Overall::Fails) {
    for (const auto& c : cond.conditions)
      if (!c.holds)
        throw std::invalid_argument("olg_geometry: condition failed: " + c.name);
    throw std::invalid_argument("olg_geometry: conditions fail");
  }
  const double M = p.M();
  OlgGeometry geo;
  geo.rect = make_rect_from_graphs("olg_trapezoid", [](double x) { return x; },
                                   [M](double) { return M; }, 0.0, K);
  const double xb = p.x_bar();
  const double eps = domain_eps(M);
  geo.r0.label = "R0";
  geo.r0.bbox = Box{0.0, xb, 0.0, M};
  geo.r0.contains = [xb, M, eps](const Point& z) {
    return z.x >= -eps && z.x <= xb && z.y >= z.x - eps && z.y <= M + eps;
  };
  geo.r1.label = "R1";
  geo.r1.bbox = Box{xb, K, xb, M};
  geo.r1.contains = [xb, K, M, eps](const Point& z) {
    return z.x > xb && z.x <= K + eps && z.y >= z.x - eps && z.y <= M + eps;
  };
  return geo;
}

OrientedRectangle olg_alternative_region(const Olg2dParams& p, double nu, double d) {
  if (!(nu >= 0 && nu < 1 && d > 0))
    throw std::invalid_argument("olg_alternative_region: require 0<=nu<1, d>0");
  auto bg = [&p](double x) { return p.b * p.g(x); };
  // largest solution of b g(x) = x
  double lo = 1e-9, hi = 1.0;
  while (bg(hi) > hi && hi < 1e6) hi *= 2;
  if (bg(hi) > hi) throw std::runtime_error("olg_alternative_region: no upper crossing");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (bg(mid) > mid ? lo : hi) = mid;
  }
  const double x_tilde = 0.5 * (lo + hi);
  const double x_hi = std::min(x_tilde, d / (1.0 - nu));
  auto lower = [](double x) { return x; };
  auto upper = [bg, nu, d](double x) { return std::min(nu * x + d, bg(x)); };
  return make_rect_from_graphs("olg_alternative", lower, upper, 0.0, x_hi);
}

DuopolyGeometry duopoly_geometry(const DuopolyParams& p) {
  const auto cond = duopoly_conditions(p);
  if (cond.overall == Overall::Fails) {
    for (const auto& c : cond.conditions)
      if (!c.holds)
        throw std::invalid_argument("duopoly_geometry: condition failed: " + c.name);
    throw std::invalid_argument("duopoly_geometry: conditions fail");
  }
  const double P = p.P(), Q = p.Q();
  const double tol = 1e-12 * std::max({1.0, std::abs(P), std::abs(Q)});
  if (Q - P <= tol)
    throw std::invalid_argument("duopoly_geometry: degenerate region (P = Q refused)");
  DuopolyGeometry geo;
  DuopolyParams pp = p;
  auto param = [pp, P, Q](double u, double v) -> Point {
    const double y = P + v * (Q - P);
    return {u * pp.right_edge_x(y), y};
  };
  const double eps = domain_eps(Q);
  auto contains = [pp, P, Q, eps](const Point& z) {
    return z.y >= P - eps && z.y <= Q + eps && z.x >= -eps &&
           z.x <= pp.right_edge_x(z.y) + eps;
  };
  geo.rect = make_oriented_rectangle("duopoly_trapezoid", param, contains, SideAxis::U);
  auto mid = [pp](double y) { return pp.mid_segment_x(y); };
  geo.r0.label = "R0";
  geo.r0.bbox = geo.rect.bbox;
  geo.r0.contains = [contains, mid](const Point& z) { return contains(z) && z.x <= mid(z.y); };
  geo.r1.label = "R1";
  geo.r1.bbox = geo.rect.bbox;
  geo.r1.contains = [contains, mid](const Point& z) { return contains(z) && z.x > mid(z.y); };
  geo.segment = [mid, P, Q](double t) -> Point {
    const double y = P + t * (Q - P);
    return {mid(y), y};
  };
  return geo;
}

namespace {

// Inverse of bi-radial coordinates: point at distances (rho1, rho2) from
// two centres D apart on the x-axis; sign selects the half-plane.
Point biradial_point(const Point& c1, double D, double rho1, double rho2, double ysign) {
  const double xr = (rho1 * rho1 - rho2 * rho2 + D * D) / (2.0 * D);
  const double arg = std::max(rho1 * rho1 - xr * xr, 0.0);
  return {c1.x + xr, c1.y + ysign * std::sqrt(arg)};
}

}  // namespace

TwistGeometry twist_geometry_1(const Twist1Params& p) {
  if (!(0 < p.p1 && p.p1 < p.p2 && 0 < p.q1 && p.q1 < p.q2))
    throw std::invalid_argument("twist_geometry_1: radii must satisfy 0<p1<p2, 0<q1<q2");
  const double D = 2.0 * p.r;
  if (!(p.p1 + p.q1 > D))
    throw std::invalid_argument("twist_geometry_1: annuli do not overlap (inner circles apart)");
  if (!(std::max(std::abs(p.p1 - p.q2), std::abs(p.p2 - p.q1)) < D))
    throw std::invalid_argument("twist_geometry_1: annuli do not overlap (one swallows the other)");
  const Point cL{-p.r, 0.0}, cR{p.r, 0.0};
  const double eps = 1e-9 * std::max(1.0, p.p2);
  auto lens_contains = [cL, cR, p, eps](double ysign) {
    return [cL, cR, p, eps, ysign](const Point& z) {
      const double dl = dist(z, cL), dr = dist(z, cR);
      return dl >= p.p1 - eps && dl <= p.p2 + eps && dr >= p.q1 - eps && dr <= p.q2 + eps &&
             ysign * z.y >= -eps;
    };
  };
  auto lens_param = [cL, D, p](double ysign) {
    return [cL, D, p, ysign](double u, double v) {
      const double rho1 = p.p1 + u * (p.p2 - p.p1);
      const double rho2 = p.q1 + v * (p.q2 - p.q1);
      return biradial_point(cL, D, rho1, rho2, ysign);
    };
  };
  TwistGeometry geo;
  geo.rectA = make_oriented_rectangle("ltm1_A_upper_lens", lens_param(+1.0),
                                      lens_contains(+1.0), SideAxis::U);
  geo.rectB = make_oriented_rectangle("ltm1_B_lower_lens", lens_param(-1.0),
                                      lens_contains(-1.0), SideAxis::V);
  geo.description =
      "upper/lower lenses of two overlapping annuli; A- on the left annulus "
      "boundaries, B- on the right annulus boundaries";
  return geo;
}

TwistGeometry twist_geometry_2(const Twist2Params& p) {
  if (!(0 < p.p1 && p.p1 < p.p2))
    throw std::invalid_argument("twist_geometry_2: require 0<p1<p2");
  if (!(-p.p1 < p.q1 && p.q1 < p.q2 && p.q2 < p.p1))
    throw std::invalid_argument("twist_geometry_2: require -p1<q1<q2<p1");
  const double eps = 1e-9 * std::max(1.0, p.p2);
  auto lens_contains = [p, eps](double xsign) {
    return [p, eps, xsign](const Point& z) {
      const double rho = std::hypot(z.x, z.y);
      return rho >= p.p1 - eps && rho <= p.p2 + eps && z.y >= p.q1 - eps &&
             z.y <= p.q2 + eps && xsign * z.x >= -eps;
    };
  };
  auto lens_param = [p](double xsign) {
    return [p, xsign](double u, double v) -> Point {
      const double rho = p.p1 + u * (p.p2 - p.p1);
      const double y = p.q1 + v * (p.q2 - p.q1);
      return {xsign * std::sqrt(std::max(rho * rho - y * y, 0.0)), y};
    };
  };
  TwistGeometry geo;
  geo.rectA = make_oriented_rectangle("ltm2_A_right_lens", lens_param(+1.0),
                                      lens_contains(+1.0), SideAxis::U);
  geo.rectB = make_oriented_rectangle("ltm2_B_left_lens", lens_param(-1.0),
                                      lens_contains(-1.0), SideAxis::V);
  geo.description =
      "right/left lenses of annulus and strip; A- on the annulus boundaries, "
      "B- on the strip edges";
  return geo;
}

std::vector<RegionPredicate> twist_bands(const PlanarMap& phi,
                                         const OrientedRectangle& rectA,
                                         const OrientedRectangle& rectB,
                                         const std::function<double(const Point&)>& image_angle,
                                         int m_expected) {
  const int grid = 96;
  std::vector<double> cell(static_cast<size_t>(grid + 1) * (grid + 1),
                           std::numeric_limits<double>::quiet_NaN());
  parallel_for(cell.size(), [&](size_t idx) {
    const int i = static_cast<int>(idx) / (grid + 1);
    const int j = static_cast<int>(idx) % (grid + 1);
    const Point z = rectA.param(static_cast<double>(i) / grid, static_cast<double>(j) / grid);
    try {
      if (rectB.contains(phi(z))) cell[idx] = image_angle(z);
    } catch (const std::exception&) {
    }
  });
  std::vector<double> hits;  // unwrapped image angles of points landing in B
  for (double w : cell)
    if (!std::isnan(w)) hits.push_back(w);
  if (hits.empty()) throw std::runtime_error("twist_bands: image never meets target rectangle");
  // phase a0: middle of the largest circular gap of the hit angles mod 2pi,
  // so the 2pi windows [a0 + 2 pi k, a0 + 2 pi (k+1)) never cut the target
  std::vector<double> mod;
  mod.reserve(hits.size());
  for (double w : hits) {
    double v = std::fmod(w, 2.0 * kPi);
    if (v < 0) v += 2.0 * kPi;
    mod.push_back(v);
  }
  std::sort(mod.begin(), mod.end());
  double best_gap = 2.0 * kPi - mod.back() + mod.front(), a0 = mod.back() + 0.5 * best_gap;
  for (size_t i = 0; i + 1 < mod.size(); ++i) {
    const double g = mod[i + 1] - mod[i];
    if (g > best_gap) {
      best_gap = g;
      a0 = mod[i] + 0.5 * g;
    }
  }
  // turn indices ranked by occupancy
  std::map<long long, int> freq;
  for (double w : hits) ++freq[static_cast<long long>(std::floor((w - a0) / (2.0 * kPi)))];
  std::vector<std::pair<int, long long>> ranked;  // (count, k)
  for (const auto& [k, c] : freq) ranked.emplace_back(c, k);
  std::sort(ranked.rbegin(), ranked.rend());
  if (static_cast<int>(ranked.size()) < m_expected)
    throw std::runtime_error("twist_bands: fewer occupied turns than expected");
  std::vector<long long> ks;
  for (int i = 0; i < m_expected; ++i) ks.push_back(ranked[i].second);
  std::sort(ks.begin(), ks.end());
  std::vector<RegionPredicate> out;
  for (size_t i = 0; i < ks.size(); ++i) {
    RegionPredicate r;
    r.label = "H" + std::to_string(i);
    r.bbox = rectA.bbox;
    const long long k = ks[i];
    auto ac = rectA.contains;
    auto bc = rectB.contains;
    r.contains = [phi, ac, bc, image_angle, a0, k](const Point& z) {
      if (!ac(z)) return false;
      try {
        if (!bc(phi(z))) return false;
        return static_cast<long long>(std::floor((image_angle(z) - a0) / (2.0 * kPi))) == k;
      } catch (const std::exception&) {
        return false;
      }
    };
    out.push_back(std::move(r));
  }
  return out;
}

double ModelConfig::get(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

ModelConfig read_model_config(std::istream& is) {
  ModelConfig cfg;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "model") {
      if (!(ls >> cfg.model)) throw std::runtime_error("config: missing model name");
      continue;
    }
    double value = 0.0;
    if (!(ls >> value)) throw std::runtime_error("config: bad value for key " + key);
    cfg.values[key] = value;
  }
  if (cfg.model.empty()) throw std::runtime_error("config: no model line");
  return cfg;
}

}  // namespace sc
