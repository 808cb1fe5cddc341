#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "stretchchaos/geometry.hpp"

namespace sc {

using BigInt = boost::multiprecision::cpp_int;

// Square nonnegative integer matrix; entry (i,j) counts transitions i -> j.
struct SymbolMatrix {
  int n = 0;
  std::vector<std::uint64_t> a;  // row-major
  std::uint64_t& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  std::uint64_t at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
  static SymbolMatrix zero(int n);
  static SymbolMatrix from_rows(std::initializer_list<std::initializer_list<std::uint64_t>> rows);
  bool is_zero_one() const;
  bool is_permutation() const;
};

void write_matrix(std::ostream& os, const SymbolMatrix& m);
SymbolMatrix read_matrix(std::istream& is);

// Distance between one-sided or two-sided symbol sequences over m symbols:
// sum |s'_i - s''_i| / m^(|i|+1).  Sequences are compared up to `horizon`
// indices on each relevant side; the returned tail_bound dominates the
// ignored remainder.  With discrete_metric, |s'_i - s''_i| is replaced by
// the 0/1 indicator of disagreement.
struct ShiftDistance {
  double value = 0.0;
  double tail_bound = 0.0;
};

ShiftDistance shift_distance(const std::vector<int>& s1, const std::vector<int>& s2,
                             int m, bool two_sided = false, int horizon = 64,
                             bool discrete_metric = false, bool periodic = false);

// Dominant eigenvalue by power iteration (all-ones start, Rayleigh
// quotient convergence to 1e-14).  Permutation matrices short-circuit to
// exactly 1.  On oscillation the shifted matrix M + eps*I is used and the
// shift removed afterwards.
struct PerronResult {
  double eigenvalue = 0.0;
  std::vector<double> eigenvector;
  int iterations = 0;
  bool used_shift = false;
};

PerronResult perron_eigenvalue(const SymbolMatrix& m, double tol = 1e-14,
                               int max_iter = 100000);

// log of the dominant eigenvalue; exactly 0 for permutation matrices.
double entropy_lower_bound(const SymbolMatrix& m);

bool is_irreducible(const SymbolMatrix& m);

// Edge shift of the graph with adjacency (multiplicity) matrix m: edges
// enumerated row-major with multiplicity, edge i can be followed by edge k
// iff terminal(i) == initial(k).
struct EdgeShift {
  SymbolMatrix transitions;               // 0/1, size = edge count
  std::vector<std::pair<int, int>> edges;  // (initial, terminal) per edge
};

EdgeShift edge_subshift(const SymbolMatrix& m);

// Number of admissible words of length n >= 1: sum of entries of m^(n-1).
BigInt count_admissible_words(const SymbolMatrix& m, int n);

// Itinerary of z under `map` through the regions; stops early with
// failure_index set when an iterate lies in no region, or in more than
// one, or within ambiguity_band of a second region.
struct Itinerary {
  std::vector<int> symbols;
  std::optional<int> failure_index;
};

Itinerary itinerary(const std::function<Point(const Point&)>& map,
                    const std::vector<RegionPredicate>& regions, Point z0, int n,
                    double ambiguity_band = 1e-9);

// Lexicographically minimal representatives of aperiodic cyclic words
// (Lyndon words) over m symbols, lengths 1..max_len, in length order.
std::vector<std::vector<int>> primitive_cyclic_words(int m, int max_len);

}  // namespace sc
