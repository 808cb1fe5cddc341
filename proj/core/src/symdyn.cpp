#include "stretchchaos/symdyn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace sc {

SymbolMatrix SymbolMatrix::zero(int n) {
  SymbolMatrix m;
  m.n = n;
  m.a.assign(static_cast<size_t>(n) * n, 0);
  return m;
}

SymbolMatrix SymbolMatrix::from_rows(
    std::initializer_list<std::initializer_list<std::uint64_t>> rows) {
  SymbolMatrix m = zero(static_cast<int>(rows.size()));
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != m.n)
      throw std::invalid_argument("SymbolMatrix::from_rows: ragged rows");
    int j = 0;
    for (auto v : row) m.at(i, j++) = v;
    ++i;
  }
  return m;
}

bool SymbolMatrix::is_zero_one() const {
  return std::all_of(a.begin(), a.end(), [](std::uint64_t v) { return v <= 1; });
}

bool SymbolMatrix::is_permutation() const {
  if (!is_zero_one()) return false;
  for (int i = 0; i < n; ++i) {
    std::uint64_t row = 0, col = 0;
    for (int j = 0; j < n; ++j) {
      row += at(i, j);
      col += at(j, i);
    }
    if (row != 1 || col != 1) return false;
  }
  return true;
}

void write_matrix(std::ostream& os, const SymbolMatrix& m) {
  os << m.n << '\n';
  for (int i = 0; i < m.n; ++i) {
    for (int j = 0; j < m.n; ++j) {
      if (j) os << ' ';
      os << m.at(i, j);
    }
    os << '\n';
  }
}

SymbolMatrix read_matrix(std::istream& is) {
  int n = 0;
  if (!(is >> n) || n <= 0) throw std::runtime_error("read_matrix: bad size");
  SymbolMatrix m = SymbolMatrix::zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      long long v = 0;
      if (!(is >> v) || v < 0) throw std::runtime_error("read_matrix: bad entry");
      m.at(i, j) = static_cast<std::uint64_t>(v);
    }
  return m;
}

ShiftDistance shift_distance(const std::vector<int>& s1, const std::vector<int>& s2,
                             int m, bool two_sided, int horizon,
                             bool discrete_metric, bool periodic) {
  if (m < 2) throw std::invalid_argument("shift_distance: alphabet size < 2");
  if (horizon < 1) throw std::invalid_argument("shift_distance: horizon < 1");
  for (const auto* s : {&s1, &s2})
    for (int v : *s)
      if (v < 0 || v >= m) throw std::invalid_argument("shift_distance: symbol out of alphabet");
  const double max_diff = discrete_metric ? 1.0 : static_cast<double>(m - 1);
  auto symbol = [&](const std::vector<int>& s, long long k) -> std::optional<int> {
    // For two-sided sequences the block is centred at index len/2.
    const long long c = two_sided ? static_cast<long long>(s.size()) / 2 : 0;
    long long idx = k + c;
    if (periodic && !s.empty())
      idx = ((idx % static_cast<long long>(s.size())) + s.size()) % s.size();
    if (idx < 0 || idx >= static_cast<long long>(s.size())) return std::nullopt;
    return s[static_cast<size_t>(idx)];
  };
  ShiftDistance out;
  auto accumulate_index = [&](long long k) {
    const double w = std::pow(static_cast<double>(m), -(static_cast<double>(std::llabs(k)) + 1.0));
    const auto a = symbol(s1, k), b = symbol(s2, k);
    if (a && b) {
      const double d = discrete_metric ? (*a != *b ? 1.0 : 0.0)
                                       : std::abs(static_cast<double>(*a - *b));
      out.value += d * w;
    } else {
      out.tail_bound += max_diff * w;
    }
  };
  for (long long k = 0; k < horizon; ++k) accumulate_index(k);
  if (two_sided)
    for (long long k = -1; k >= -horizon; --k) accumulate_index(k);
  // geometric tail beyond the horizon
  const double tail_one_side =
      max_diff * std::pow(static_cast<double>(m), -static_cast<double>(horizon)) / (m - 1);
  out.tail_bound += two_sided ? 2 * tail_one_side : tail_one_side;
  return out;
}

namespace {

void mat_vec(const SymbolMatrix& m, const std::vector<double>& v, std::vector<double>& out) {
  out.assign(m.n, 0.0);
  for (int i = 0; i < m.n; ++i) {
    double s = 0.0;
    for (int j = 0; j < m.n; ++j) s += static_cast<double>(m.at(i, j)) * v[j];
    out[i] = s;
  }
}

// One power-iteration run; returns nullopt when the Rayleigh quotient
// fails to settle within the iteration budget.
std::optional<std::pair<double, std::vector<double>>> power_iterate(
    const SymbolMatrix& m, double shift, double tol, int max_iter, int* iters) {
  std::vector<double> v(m.n, 1.0), w;
  double prev = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    mat_vec(m, v, w);
    if (shift != 0.0)
      for (int i = 0; i < m.n; ++i) w[i] += shift * v[i];
    double num = 0.0, den = 0.0;
    for (int i = 0; i < m.n; ++i) {
      num += v[i] * w[i];
      den += v[i] * v[i];
    }
    if (den == 0.0) return std::nullopt;
    const double lambda = num / den;
    double nrm = 0.0;
    for (double x : w) nrm = std::max(nrm, std::abs(x));
    if (nrm == 0.0) {
      // nilpotent part died out: dominant eigenvalue 0
      *iters = it + 1;
      return std::make_pair(0.0, std::vector<double>(m.n, 0.0));
    }
    for (auto& x : w) x /= nrm;
    v.swap(w);
    if (it > 0 && std::abs(lambda - prev) < tol * std::max(1.0, std::abs(lambda))) {
      *iters = it + 1;
      return std::make_pair(lambda, v);
    }
    prev = lambda;
  }
  return std::nullopt;
}

}  // namespace

PerronResult perron_eigenvalue(const SymbolMatrix& m, double tol, int max_iter) {
  if (m.n <= 0) throw std::invalid_argument("perron_eigenvalue: empty matrix");
  if (std::all_of(m.a.begin(), m.a.end(), [](std::uint64_t v) { return v == 0; }))
    throw std::invalid_argument("perron_eigenvalue: zero matrix");
  PerronResult r;
  if (m.is_permutation()) {
    r.eigenvalue = 1.0;
    r.eigenvector.assign(m.n, 1.0);
    r.iterations = 0;
    return r;
  }
  int iters = 0;
  if (auto res = power_iterate(m, 0.0, tol, max_iter, &iters)) {
    r.eigenvalue = res->first;
    r.eigenvector = std::move(res->second);
    r.iterations = iters;
    return r;
  }
  // Reducible / periodic structure can make the plain iteration oscillate;
  // retry on the slightly shifted matrix and remove the shift afterwards.
  const double eps = 1e-12;
  r.used_shift = true;
  if (auto res = power_iterate(m, eps, tol, max_iter, &iters)) {
    r.eigenvalue = res->first - eps;
    r.eigenvector = std::move(res->second);
    r.iterations = iters;
    return r;
  }
  throw std::runtime_error("perron_eigenvalue: power iteration did not converge");
}

double entropy_lower_bound(const SymbolMatrix& m) {
  if (m.is_permutation()) return 0.0;
  return std::log(perron_eigenvalue(m).eigenvalue);
}

bool is_irreducible(const SymbolMatrix& m) {
  const int n = m.n;
  if (n == 0) return false;
  auto reach = [&](int src, bool transpose) {
    std::vector<std::uint8_t> seen(n, 0);
    std::deque<int> q{src};
    seen[src] = 1;
    while (!q.empty()) {
      const int i = q.front();
      q.pop_front();
      for (int j = 0; j < n; ++j) {
        const std::uint64_t e = transpose ? m.at(j, i) : m.at(i, j);
        if (e > 0 && !seen[j]) {
          seen[j] = 1;
          q.push_back(j);
        }
      }
    }
    return seen;
  };
  const auto fwd = reach(0, false), bwd = reach(0, true);
  for (int i = 0; i < n; ++i)
    if (!fwd[i] || !bwd[i]) return false;
  if (n == 1) return m.at(0, 0) > 0;
  return true;
}

EdgeShift edge_subshift(const SymbolMatrix& m) {
  EdgeShift es;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j)
      for (std::uint64_t c = 0; c < m.at(i, j); ++c) es.edges.emplace_back(i, j);
  const int ne = static_cast<int>(es.edges.size());
  if (ne == 0) throw std::invalid_argument("edge_subshift: matrix has no edges");
  es.transitions = SymbolMatrix::zero(ne);
  for (int e = 0; e < ne; ++e)
    for (int f = 0; f < ne; ++f)
      es.transitions.at(e, f) = (es.edges[e].second == es.edges[f].first) ? 1 : 0;
  return es;
}

BigInt count_admissible_words(const SymbolMatrix& m, int n) {
  if (n < 1) throw std::invalid_argument("count_admissible_words: n < 1");
  std::vector<BigInt> v(m.n, 1);  // column vector of ones
  for (int step = 1; step < n; ++step) {
    std::vector<BigInt> w(m.n, 0);
    for (int i = 0; i < m.n; ++i) {
      BigInt s = 0;
      for (int j = 0; j < m.n; ++j) s += BigInt(m.at(i, j)) * v[j];
      w[i] = std::move(s);
    }
    v.swap(w);
  }
  BigInt total = 0;
  for (const auto& x : v) total += x;
  return total;
}

Itinerary itinerary(const std::function<Point(const Point&)>& map,
                    const std::vector<RegionPredicate>& regions, Point z0, int n,
                    double ambiguity_band) {
  Itinerary it;
  Point z = z0;
  for (int i = 0; i < n; ++i) {
    int found = -1, count = 0;
    for (size_t r = 0; r < regions.size(); ++r) {
      bool inside = regions[r].contains(z);
      if (!inside && ambiguity_band > 0.0) {
        // probe a small ring so near-boundary ambiguity is caught
        for (int d = 0; d < 8 && !inside; ++d) {
          const double a = d * 0.25 * 3.14159265358979323846;
          inside = regions[r].contains(
              {z.x + ambiguity_band * std::cos(a), z.y + ambiguity_band * std::sin(a)});
        }
      }
      if (inside) {
        ++count;
        if (found < 0) found = static_cast<int>(r);
      }
    }
    if (count != 1) {
      it.failure_index = i;
      return it;
    }
    it.symbols.push_back(found);
    if (i + 1 < n) {
      try {
        z = map(z);
      } catch (const std::exception&) {
        it.failure_index = i + 1;
        return it;
      }
    }
  }
  return it;
}

std::vector<std::vector<int>> primitive_cyclic_words(int m, int max_len) {
  // Duval's algorithm: Lyndon words over m symbols up to length max_len.
  if (m < 1 || max_len < 1)
    throw std::invalid_argument("primitive_cyclic_words: bad arguments");
  std::vector<std::vector<int>> out;
  std::vector<int> w{-1};
  while (!w.empty()) {
    ++w.back();
    out.push_back(w);
    const size_t k = w.size();
    while (static_cast<int>(w.size()) < max_len) w.push_back(w[w.size() - k]);
    while (!w.empty() && w.back() == m - 1) w.pop_back();
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });
  return out;
}

}  // namespace sc
