#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stretchchaos/geometry.hpp"

namespace sc {

using PlanarMap = std::function<Point(const Point&)>;

// Thrown by maps that are undefined at the queried point.  The checker
// records it per sample and marks the path inconclusive, never failed.
struct MapDomainError : std::runtime_error {
  explicit MapDomainError(const std::string& what) : std::runtime_error(what) {}
};

enum class SideId { Left, Right, Down, Up, None };
const char* side_name(SideId s);

enum class PathOutcome { Witnessed, Failed, Inconclusive };

struct StretchWitness {
  int path_id = -1;
  double t_lo = 0.0, t_hi = 0.0;
  SideId entry = SideId::None, exit = SideId::None;
};

struct RegionStretchResult {
  std::string region_label;
  int paths_tested = 0;
  int paths_witnessed = 0;
  int paths_inconclusive = 0;
  bool pass = false;
  std::vector<StretchWitness> witnesses;  // one per witnessed path
};

struct StretchReport {
  std::string map_id, rect_a, rect_b;
  double tol = 0.0;
  std::uint64_t seed = 0;
  int crossing_number = 0;  // regions with pass = true
  bool any_inconclusive = false;
  double min_region_gap = -1.0;  // min observed inter-region sample distance
  std::vector<RegionStretchResult> regions;
  bool all_pass() const;
  nlohmann::json to_json() const;
};

struct StretchOptions {
  double tol = -1.0;  // < 0: default 1e-6 * rectB bbox diameter
  std::uint64_t seed = 0;
  int refine_levels = 3;     // local resampling depth for thin candidates
  int min_run_samples = 8;   // below this a candidate is refined / inconclusive
  std::string map_id = "map";
};

// Verifies (K_i, map): A~ -> B~ for each region on the given path family.
// A path is witnessed for K_i when some maximal parameter subinterval with
// gamma(t) in K_i and map(gamma(t)) in B enters B through one component of
// B- and leaves through the other.
StretchReport check_stretch(const PlanarMap& map, const OrientedRectangle& rectA,
                            const OrientedRectangle& rectB,
                            const std::vector<RegionPredicate>& regions,
                            const std::vector<Path>& paths,
                            const StretchOptions& opts = {});

// Number of disjoint parameter subintervals of `path` whose image under
// `map` lies in rectB and joins the two components of B-.
int crossing_count(const PlanarMap& map, const OrientedRectangle& rectB,
                   const Path& path, double tol = -1.0);

// Composite check of Lemma-style two-step stretching: regions
// {z in H_i : phi(z) in K_j} under psi o phi from rectA to rectC.
StretchReport check_composition(const PlanarMap& phi, const PlanarMap& psi,
                                const OrientedRectangle& rectA,
                                const OrientedRectangle& rectB,
                                const OrientedRectangle& rectC,
                                const std::vector<RegionPredicate>& regionsH,
                                const std::vector<RegionPredicate>& regionsK,
                                const std::vector<Path>& paths,
                                const StretchOptions& opts = {});

}  // namespace sc
