#pragma once

// Reference computations for the unit tests. Each one follows the defining
// formula directly, without going through the library code it checks.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "heartlab/kernel.hpp"

namespace oracle {

using heartlab::Real;

/// P0 in closed form: lambda 1/2, mu 12, B = 1, C = e.
struct ClosedFormP0 {
  static long double gamma() { return std::log(3.0L); }
  static long double beta() { return std::log(2.0L); }
  static long double A() { return std::log(2.0L) / std::log(3.0L); }
  static long double c_E() { return -std::log(2.0L); }
  static long double c_I() { return std::log(2.0L); }
  static long double tau() { return (c_I() - c_E()) / gamma(); }
};

struct LatticePoint {
  long p = 0;
  long q = 0;
  long double residual = 0;
};

/// Exhaustive scan of |tau1 - tau2 + p + q A| over the box; the smallest
/// residual wins, then the smaller |p| + |q|.
inline std::optional<LatticePoint> brute_lattice(long double tau1, long double tau2, long double A, long bound,
                                                 long double tol) {
  std::optional<LatticePoint> best;
  for (long p = -bound; p <= bound; ++p) {
    for (long q = -bound; q <= bound; ++q) {
      const long double r = std::fabs(tau1 - tau2 + p + q * A);
      if (r > tol) continue;
      if (!best || r < best->residual ||
          (r == best->residual && std::labs(p) + std::labs(q) < std::labs(best->p) + std::labs(best->q))) {
        best = LatticePoint{p, q, r};
      }
    }
  }
  return best;
}

/// Two-sided Sturmian word of the progressions n gamma + c_E (letter E) and
/// k beta + c_I (letter I), n, k >= 1: before the k-th I come floor(k A + tau)
/// letters E.
inline std::string rotation_word(long double A, long double tau, std::size_t length) {
  std::string w;
  long emitted_e = 0;
  for (long k = 1; w.size() < length; ++k) {
    const long target = static_cast<long>(std::floor(k * A + tau));
    while (emitted_e < target && w.size() < length) {
      w.push_back('E');
      ++emitted_e;
    }
    if (w.size() < length) w.push_back('I');
  }
  return w;
}

/// ln of the n-th pre-subtraction value of x -> e^offset x^exponent - eps
/// started at e^ln_start, minus ln eps. Zero at a connection after n turns.
/// Returns nullopt when an intermediate value has already left the winding side.
inline std::optional<Real> formal_root(const Real& exponent, const Real& offset, const Real& ln_start, int n,
                                       const Real& sigma) {
  const Real ln_eps = -exp(sigma);
  Real ln_x = ln_start;
  Real pre;
  for (int j = 1; j <= n; ++j) {
    pre = exponent * ln_x + offset;
    if (j == n) break;
    if (!(pre > ln_eps)) return std::nullopt;
    ln_x = pre + log1p(-exp(ln_eps - pre));
  }
  return pre - ln_eps;
}

/// Sign changes of a function at increasing abscissae; a point where the
/// function vanishes counts as a cell of zero width.
template <class F>
std::vector<std::pair<Real, Real>> sign_change_cells(F&& f, const std::vector<Real>& xs) {
  std::vector<std::pair<Real, Real>> cells;
  std::optional<Real> prev_x;
  int prev_sign = 0;
  for (const Real& x : xs) {
    const auto v = f(x);
    if (!v) continue;
    const int s = v->sign();
    if (s == 0) {
      cells.emplace_back(x, x);
    } else if (prev_x && prev_sign != 0 && s != prev_sign) {
      cells.emplace_back(*prev_x, x);
    }
    prev_x = x;
    prev_sign = s;
  }
  return cells;
}

/// Uniform interior grid of (lo, hi).
inline std::vector<Real> uniform_grid(const Real& lo, const Real& hi, int points) {
  const auto P = lo.precision();
  std::vector<Real> xs;
  for (int j = 1; j <= points; ++j) {
    xs.push_back(lo + (hi - lo) * Real(static_cast<long>(j), P) / Real(static_cast<long>(points + 1), P));
  }
  return xs;
}

/// Interior grid of (lo, hi) refining geometrically towards hi, down to a
/// distance `closest` from it.
inline std::vector<Real> graded_grid(const Real& lo, const Real& hi, int points, double closest) {
  const auto P = lo.precision();
  const Real L = log((hi - lo) / Real(closest, P));
  std::vector<Real> xs;
  for (int j = 1; j <= points; ++j) {
    xs.push_back(hi - (hi - lo) * exp(-L * Real(static_cast<long>(j), P) / Real(static_cast<long>(points), P)));
  }
  return xs;
}

template <class F>
std::vector<std::pair<Real, Real>> sign_change_cells(F&& f, const Real& lo, const Real& hi, int points) {
  return sign_change_cells(std::forward<F>(f), uniform_grid(lo, hi, points));
}

struct DiophantinePair {
  long m = 0;
  long n = 0;
};

/// Violations of |gamma (n A - m) - s| <= 1/(m^2 + n^2) for 1 <= n <= n_max
/// with m over twice the Case-1 range, in long double.
inline std::vector<DiophantinePair> dioph_doubled(long double A, long double gamma, long double s, long n_max) {
  const long double J = 1.0L + (std::fabs(s) + 1.0L) / std::fabs(gamma);
  std::vector<DiophantinePair> out;
  for (long n = 1; n <= n_max; ++n) {
    const long M = 2 * static_cast<long>(std::ceil((std::fabs(A) + J) * n));
    for (long m = -M; m <= M; ++m) {
      const long double lhs = std::fabs(gamma * (n * A - m) - s);
      const long double rhs = 1.0L / (static_cast<long double>(m) * m + static_cast<long double>(n) * n);
      if (lhs <= rhs) out.push_back({m, n});
    }
  }
  return out;
}

/// Partial quotients of A by the Euclidean recursion at the precision of A.
inline std::vector<std::pair<std::int64_t, std::int64_t>> convergents(const Real& A, int count) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  std::int64_t p0 = 1, q0 = 0, p1 = 0, q1 = 1;
  Real x = A;
  for (int j = 0; j < count; ++j) {
    const long a = floor(x).to_long_floor();
    const std::int64_t p = a * p0 + p1;
    const std::int64_t q = a * q0 + q1;
    p1 = p0;
    q1 = q0;
    p0 = p;
    q0 = q;
    out.emplace_back(p, q);
    const Real frac = x - Real(a, x.precision());
    if (frac < Real::pow2(-static_cast<long>(A.precision() / 2), A.precision())) break;
    x = 1.0 / frac;
  }
  return out;
}

}  // namespace oracle
