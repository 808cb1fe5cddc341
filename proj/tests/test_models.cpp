#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <stretchchaos/models.hpp>

using namespace sc;

TEST_CASE("logistic and 1d olg evaluations") {
  CHECK(eval_logistic({4.0}, 0.5) == doctest::Approx(1.0));
  CHECK(eval_logistic({4.5}, 0.5) == doctest::Approx(1.125));
  CHECK(eval_logistic({4.5}, 0.0) == 0.0);
  // olg1d g(x) = (mu x e^-x)^(1/beta) reduces to mu x e^-x at beta = 1 in
  // the planar map; the 1d map peak sits at x = 1
  const Olg1dParams o{80.0};
  CHECK(eval_olg1d(o, 1.0) > eval_olg1d(o, 0.5));
  CHECK(eval_olg1d(o, 1.0) > eval_olg1d(o, 2.0));
}

TEST_CASE("planar olg map structure") {
  const Olg2dParams p{80.0, 2.0, 1.3};
  CHECK(p.M() == doctest::Approx(std::pow(80.0 * std::exp(-1.0), 1.0 / 1.3)));
  // second component depends only on x
  const Point a = eval_olg2d(p, {0.7, 0.1});
  const Point b = eval_olg2d(p, {0.7, 0.9});
  CHECK(a.y == doctest::Approx(b.y));
  // first component is g(x) - y/b
  CHECK(a.x == doctest::Approx(a.y - 0.1 / p.b));
}

TEST_CASE("olg admissibility conditions at the reference parameters") {
  const Olg2dParams p{80.0, 2.0, 1.3};
  const auto rep = olg_conditions(p, 6.0);
  CHECK(rep.overall == Overall::HoldsStrict);
  CHECK(p.M() == doctest::Approx(13.48474370).epsilon(1e-8));
  // far smaller growth cannot support the construction
  const Olg2dParams weak{3.0, 2.0, 1.3};
  CHECK(olg_conditions(weak, 6.0).overall == Overall::Fails);
}

TEST_CASE("duopoly conditions: strict interior vs rational boundary") {
  DuopolyParams p;
  p.alpha = 1.05;
  CHECK(duopoly_conditions(p).overall == Overall::HoldsStrict);

  // at alpha = 26/27 one chained inequality holds with equality
  DuopolyParams edge;
  edge.alpha = 26.0 / 27.0;
  const auto rep = duopoly_conditions(edge);
  CHECK(rep.overall == Overall::Boundary);
  double min_margin = 1e300;
  for (const auto& c : rep.conditions) min_margin = std::min(min_margin, std::abs(c.margin));
  CHECK(min_margin < 1e-12);

  // the tight inequality is a - 2 c1 + c2 > 26 / (3 alpha): with the
  // default costs the left side is 9 and 26 / (3 * 26/27) = 9 exactly
  CHECK(std::abs(3.0 * edge.alpha * (edge.a - 2.0 * edge.c1 + edge.c2) - 26.0) < 1e-13);
  CHECK(std::abs(rep.conditions[0].margin) < 1e-12);
}

TEST_CASE("duopoly geometry splits the rectangle along the reaction segment") {
  DuopolyParams p;
  p.alpha = 1.05;
  const auto geom = duopoly_geometry(p);
  // the two regions are disjoint and both inside the rectangle
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(geom.rect.bbox.x_lo, geom.rect.bbox.x_hi);
  std::uniform_real_distribution<double> uy(geom.rect.bbox.y_lo, geom.rect.bbox.y_hi);
  for (int i = 0; i < 2000; ++i) {
    const Point z{ux(rng), uy(rng)};
    const bool in0 = geom.r0.contains(z), in1 = geom.r1.contains(z);
    CHECK_FALSE((in0 && in1));
    if (in0 || in1) CHECK(geom.rect.contains(z));
  }
  // the separating segment spans y in [P, Q]
  CHECK(geom.segment(0.0).y == doctest::Approx(p.P()));
  CHECK(geom.segment(1.0).y == doctest::Approx(p.Q()));
}

TEST_CASE("olg geometry regions are disjoint subsets of the rectangle") {
  const Olg2dParams p{80.0, 2.0, 1.3};
  const auto geom = olg_geometry(p, 6.0);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ux(geom.rect.bbox.x_lo, geom.rect.bbox.x_hi);
  std::uniform_real_distribution<double> uy(geom.rect.bbox.y_lo, geom.rect.bbox.y_hi);
  for (int i = 0; i < 2000; ++i) {
    const Point z{ux(rng), uy(rng)};
    const bool in0 = geom.r0.contains(z), in1 = geom.r1.contains(z);
    CHECK_FALSE((in0 && in1));
    if (in0 || in1) CHECK(geom.rect.contains(z));
  }
}

TEST_CASE("twist maps preserve their annuli radii") {
  const Twist1Params p1;
  // phi twists about (-r, 0): |z - (-r,0)| is invariant
  const Point z{1.2, 2.0};
  const double before = std::hypot(z.x + p1.r, z.y);
  const Point w = eval_twist1_phi(p1, z);
  CHECK(std::hypot(w.x + p1.r, w.y) == doctest::Approx(before));
  // psi twists about (r, 0)
  const double before2 = std::hypot(z.x - p1.r, z.y);
  const Point w2 = eval_twist1_psi(p1, z);
  CHECK(std::hypot(w2.x - p1.r, w2.y) == doctest::Approx(before2));

  const Twist2Params p2;
  const Point z2{3.5, 1.0};
  CHECK(norm(eval_twist2_phi(p2, z2)) == doctest::Approx(norm(z2)));
  // the strip shear keeps y fixed
  CHECK(eval_twist2_psi(p2, z2).y == doctest::Approx(z2.y));
}

TEST_CASE("twist geometries expose lens-shaped crossing rectangles") {
  const auto g1 = twist_geometry_1(Twist1Params{});
  CHECK(g1.rectA.contains(g1.rectA.param(0.5, 0.5)));
  CHECK(g1.rectB.contains(g1.rectB.param(0.5, 0.5)));
  const auto g2 = twist_geometry_2(Twist2Params{});
  CHECK(g2.rectA.contains(g2.rectA.param(0.5, 0.5)));
  CHECK(g2.rectB.contains(g2.rectB.param(0.5, 0.5)));
  // boundary parameter points satisfy membership too
  for (double u : {0.0, 0.5, 1.0})
    for (double v : {0.0, 0.5, 1.0}) {
      CHECK(g2.rectA.contains(g2.rectA.param(u, v)));
      CHECK(g2.rectB.contains(g2.rectB.param(u, v)));
    }
}

TEST_CASE("counterexample map pins the interval endpoints") {
  const CounterexampleParams cp;
  CHECK(eval_counterexample(cp, 0.0) > 0.0);  // rises above the diagonal at 0
  CHECK(eval_counterexample(cp, 1.0) < 1.0);  // falls below at 1
  // continuous across the breakpoints
  const double eps = 1e-9;
  CHECK(eval_counterexample(cp, cp.a - eps) ==
        doctest::Approx(eval_counterexample(cp, cp.a + eps)).epsilon(1e-6));
  CHECK(eval_counterexample(cp, cp.b - eps) ==
        doctest::Approx(eval_counterexample(cp, cp.b + eps)).epsilon(1e-6));
}

TEST_CASE("model config parser") {
  std::stringstream ss(
      "# comment\n"
      "model olg2d\n"
      "mu 80  # growth\n"
      "b 2\n"
      "beta 1.3\n");
  const auto cfg = read_model_config(ss);
  CHECK(cfg.model == "olg2d");
  CHECK(cfg.get("mu", 0.0) == 80.0);
  CHECK(cfg.get("beta", 0.0) == 1.3);
  CHECK(cfg.get("absent", -1.0) == -1.0);

  std::stringstream bad("mu oops\n");
  CHECK_THROWS(read_model_config(bad));
}
