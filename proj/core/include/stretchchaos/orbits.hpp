#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stretchchaos/geometry.hpp"
#include "stretchchaos/stretching.hpp"
#include "stretchchaos/symdyn.hpp"

namespace sc {

enum class OrbitMethod { Covering1d, Newton2d };
enum class OrbitStatus { Found, NotFound, NumericalFailure };

struct PeriodicOrbitResult {
  std::vector<int> itinerary;
  OrbitStatus status = OrbitStatus::NotFound;
  Point point{};           // representative orbit point (x only for 1d)
  double residual = -1.0;  // ||f^k(w) - w||_inf
  bool itinerary_verified = false;
  OrbitMethod method = OrbitMethod::Covering1d;
  std::string note;
  nlohmann::json to_json() const;
};

using IntervalMap = std::function<double(double)>;

struct Interval {
  double lo = 0.0, hi = 0.0;
};

// mu > 4: the two maximal closed subintervals of [0,1] each mapped by the
// logistic map onto [0,1] (split at the preimages of 1).
std::vector<Interval> logistic_covering_intervals(double mu);

// Critical structure of the second iterate for 2 < mu <= 4: interval
// I = [F(F(1/2)) + delta, F(1/2)] together with two disjoint monotone
// branches I0, I1 inside I, each mapped by F^2 onto I.
struct SecondIterateCover {
  Interval window;                  // I
  std::vector<Interval> branches;   // I0, I1
};
SecondIterateCover logistic_second_iterate_cover(double mu, double delta = 0.01);

// Periodic point of an interval map realizing a cyclic itinerary through
// covering intervals: verifies f(I_{s_i}) contains I_{s_{i+1}}, builds the
// nested preimage interval inside I_{s_0}, and bisects f^k(x) - x there.
// Throws std::runtime_error naming the failing pair if a covering
// precondition does not hold.
PeriodicOrbitResult covering_periodic_point_1d(const IntervalMap& f,
                                               const std::vector<Interval>& intervals,
                                               const std::vector<int>& itinerary,
                                               double tol = 1e-12);

struct NewtonOptions {
  int grid_density = 64;       // seeds per axis over the start region bbox
  int max_grid_density = 1024; // doubled up to this while no seed is feasible
  double tol = 1e-9;           // accepted residual
  double slack = 1e-3;         // itinerary slack band, relative to bbox size
  int max_newton_iter = 60;
};

// Periodic point of a planar map realizing the itinerary through the
// regions: grid-seeded damped Newton on psi^k(w) - w with central
// difference Jacobian, falling back to direct residual minimization.
PeriodicOrbitResult newton_periodic_point_2d(const PlanarMap& map,
                                             const std::vector<RegionPredicate>& regions,
                                             const std::vector<int>& itinerary,
                                             const NewtonOptions& opts = {});

struct ChaosCertificate {
  StretchReport stretch;
  SymbolMatrix transitions;  // all-ones over passing regions
  double entropy_bound = 0.0;
  std::vector<PeriodicOrbitResult> orbits;
  int failures = 0;
  bool pass = false;  // stretch passed and every itinerary realized
  nlohmann::json to_json() const;
  void write_orbits_csv(std::ostream& os) const;
};

// Planar certificate: check_stretch, then one periodic point per
// primitive cyclic itinerary up to max_period via the Newton finder.
ChaosCertificate chaos_certificate(const PlanarMap& map, const OrientedRectangle& rectA,
                                   const std::vector<RegionPredicate>& regions,
                                   int max_period, const std::vector<Path>& paths,
                                   const StretchOptions& stretch_opts = {},
                                   const NewtonOptions& newton_opts = {});

// Interval-map variant: the stretch check runs on the planar embedding
// (f(x), y) over [0,1] strips while orbits come from the 1d covering
// finder (exact intervals, residual ~1e-12).
ChaosCertificate chaos_certificate_interval(const IntervalMap& f,
                                            const std::vector<Interval>& intervals,
                                            int max_period,
                                            int n_paths = 20, int n_samples = 512,
                                            std::uint64_t seed = 1,
                                            double tol_residual = 1e-12);

}  // namespace sc
