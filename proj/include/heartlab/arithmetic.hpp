#pragma once

// Invariant arithmetic: the mod-(1, A) lattice predicate, the Diophantine
// inclusion A - m/n in [(s - r)/(gamma n), (s + r)/(gamma n)], r = 1/(m^2 + n^2),
// its measure experiment and continued fractions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "heartlab/kernel.hpp"
#include "heartlab/model.hpp"

namespace heartlab::arith {

inline constexpr int kDefaultLatticeBound = 50;

/// Default lattice tolerance 1e-9 * gamma.
inline Real default_lattice_tol(const Real& gamma) { return 1e-9 * abs(gamma); }

struct LatticeWitness {
  long p = 0;
  long q = 0;
  Real residual;  // |tau1 - tau2 + p + q A|
};

/// Bounded search for tau1 - tau2 + p + q A = 0 within tol.
///
/// The subgroup Z + A Z is dense, so the answer depends on the bounds; ties in
/// the residual go to the smaller |p| + |q|, then to the lexicographically
/// smaller (p, q).
inline std::optional<LatticeWitness> equiv_mod_lattice(const Real& tau1, const Real& tau2, const Real& A,
                                                       long p_bound, long q_bound, const Real& tol) {
  if (p_bound <= 0 || q_bound <= 0) throw DomainError("equiv_mod_lattice: bounds must be positive");
  if (tol < 0.0) throw DomainError("equiv_mod_lattice: tolerance must be non-negative");
  const Real diff = tau1 - tau2;
  std::optional<LatticeWitness> best;
  auto better = [](const LatticeWitness& a, const LatticeWitness& b) {
    if (a.residual != b.residual) return a.residual < b.residual;
    const long la = std::labs(a.p) + std::labs(a.q);
    const long lb = std::labs(b.p) + std::labs(b.q);
    if (la != lb) return la < lb;
    return std::pair(a.p, a.q) < std::pair(b.p, b.q);
  };
  for (long q = -q_bound; q <= q_bound; ++q) {
    const Real base = diff + Real(q, A.precision()) * A;
    for (long p = -p_bound; p <= p_bound; ++p) {
      LatticeWitness w{p, q, abs(base + Real(p, A.precision()))};
      if (w.residual > tol) continue;
      if (!best || better(w, *best)) best = std::move(w);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Diophantine condition.

/// J = 1 + (|s| + 1)/|gamma|.
inline Real case1_bound(const Real& /*A*/, const Real& gamma, const Real& s) {
  if (gamma.is_zero()) throw DomainError("case1_bound: gamma must be non-zero");
  return 1.0 + (abs(s) + 1.0) / abs(gamma);
}

struct Violation {
  long m = 0;
  long n = 0;
  Real offset;  // gamma (n A - m) - s, at most 1/(m^2 + n^2) in modulus
};

struct DiophantineReport {
  enum class Verdict { NoViolationsBeyond, ViolationsFound };

  long n_max = 0;
  std::vector<Violation> violations;
  Verdict verdict = Verdict::NoViolationsBeyond;
  long index = 0;  // largest violating n; meaningful for NoViolationsBeyond
};

/// The inclusion for one pair, evaluated at the precision of A.
inline bool diophantine_inclusion(const Real& A, const Real& gamma, const Real& s, long m, long n,
                                  Real* offset = nullptr) {
  const Precision P = A.precision();
  const Real off = gamma * (Real(n, P) * A - Real(m, P)) - s;
  const Real r = 1.0 / (Real(m, P) * Real(m, P) + Real(n, P) * Real(n, P));
  if (offset) *offset = off;
  return abs(off) <= r;
}

/// Exhaustive scan over 1 <= n <= n_max, |m| <= ceil((|A| + J) n).
///
/// Screens in double precision and confirms candidates at the precision of A.
/// Violations with n > n_max/2 turn the verdict into ViolationsFound.
inline DiophantineReport diophantine_check(const Real& A, const Real& gamma, const Real& s, long n_max) {
  if (gamma.is_zero()) throw DomainError("diophantine_check: gamma must be non-zero");
  if (n_max < 1) throw DomainError("diophantine_check: n_max must be >= 1");
  const double J = case1_bound(A, gamma, s).to_double();
  const double a = A.to_double();
  const double g = gamma.to_double();
  const double sd = s.to_double();
  DiophantineReport rep;
  rep.n_max = n_max;
  for (long n = 1; n <= n_max; ++n) {
    const long M = static_cast<long>(std::ceil((std::fabs(a) + J) * static_cast<double>(n)));
    for (long m = -M; m <= M; ++m) {
      const double off = g * (static_cast<double>(n) * a - static_cast<double>(m)) - sd;
      const double r = 1.0 / (static_cast<double>(m) * m + static_cast<double>(n) * n);
      const double slack = 1e-9 * (std::fabs(g) * (std::fabs(a) * n + std::labs(m)) + std::fabs(sd) + r);
      if (std::fabs(off) > r + slack) continue;
      Real exact_off;
      if (diophantine_inclusion(A, gamma, s, m, n, &exact_off)) rep.violations.push_back({m, n, exact_off});
    }
  }
  for (const auto& v : rep.violations) rep.index = std::max(rep.index, v.n);
  rep.verdict = 2 * rep.index > n_max ? DiophantineReport::Verdict::ViolationsFound
                                      : DiophantineReport::Verdict::NoViolationsBeyond;
  return rep;
}

/// (A, gamma, s_model) of a family.
inline DiophantineReport diophantine_check(const model::FamilyParams& p, long n_max) {
  const model::Derived d = model::derive(p);
  return diophantine_check(d.A, d.gamma, d.s_model, n_max);
}

// ---------------------------------------------------------------------------
// Measure experiment.

struct MeasureReport {
  double gamma = 0.0;
  double s = 0.0;
  double T = 0.0;
  long N = 0;
  long N_cap = 0;
  std::size_t interval_count = 0;
  double union_measure = 0.0;   // |[-T, T] intersected with the union of J_n, N < n <= N_cap|
  double bound = 0.0;           // 4 (T + J)/|gamma| * sum_{|n| > N} n^-2
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double hit_fraction = 0.0;
  double expected_fraction = 0.0;
  double binomial_sigma = 0.0;

  bool within_bound() const { return union_measure <= bound; }
  bool within_3_sigma() const {
    return std::fabs(hit_fraction - expected_fraction) <= 3.0 * binomial_sigma + 1e-15;
  }
};

/// sum_{n > N} 1/n^2 by direct summation plus an Euler-Maclaurin tail.
inline double zeta2_tail(long N) {
  const long K = std::max<long>(N + 1, 100000);
  double sum = 0.0;
  for (long n = K; n > N; --n) sum += 1.0 / (static_cast<double>(n) * n);
  const double k = static_cast<double>(K);
  return sum + 1.0 / k - 1.0 / (2.0 * k * k) + 1.0 / (6.0 * k * k * k);
}

/// Merged closed intervals sorted by left end.
inline std::vector<std::pair<double, double>> merge_intervals(std::vector<std::pair<double, double>> v) {
  std::sort(v.begin(), v.end());
  std::vector<std::pair<double, double>> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.first <= out.back().second) {
      out.back().second = std::max(out.back().second, iv.second);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

inline MeasureReport measure_experiment(double gamma, double s, double T, long N, std::size_t samples,
                                        std::uint64_t seed, long cap_factor = 10) {
  if (!(T > 0.0)) throw DomainError("measure_experiment: T must be positive");
  if (N < 1) throw DomainError("measure_experiment: N must be >= 1");
  if (gamma == 0.0) throw DomainError("measure_experiment: gamma must be non-zero");
  if (cap_factor < 1) throw DomainError("measure_experiment: cap factor must be >= 1");
  MeasureReport rep;
  rep.gamma = gamma;
  rep.s = s;
  rep.T = T;
  rep.N = N;
  rep.N_cap = cap_factor * N;
  rep.samples = samples;
  rep.seed = seed;
  const double J = 1.0 + (std::fabs(s) + 1.0) / std::fabs(gamma);

  std::vector<std::pair<double, double>> pieces;
  for (long n = N + 1; n <= rep.N_cap; ++n) {
    const double nd = static_cast<double>(n);
    const long m_lo = static_cast<long>(std::floor(-T * nd - J * nd));
    const long m_hi = static_cast<long>(std::ceil(T * nd + J * nd));
    for (long m = m_lo; m <= m_hi; ++m) {
      const double r = 1.0 / (static_cast<double>(m) * m + nd * nd);
      double a = m / nd + (s - r) / (gamma * nd);
      double b = m / nd + (s + r) / (gamma * nd);
      if (a > b) std::swap(a, b);
      a = std::max(a, -T);
      b = std::min(b, T);
      if (a < b) pieces.emplace_back(a, b);
    }
  }
  rep.interval_count = pieces.size();
  const auto merged = merge_intervals(std::move(pieces));
  for (const auto& iv : merged) rep.union_measure += iv.second - iv.first;
  rep.bound = 4.0 * (T + J) / std::fabs(gamma) * 2.0 * zeta2_tail(N);

  if (samples > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-T, T);
    std::size_t hits = 0;
    for (std::size_t j = 0; j < samples; ++j) {
      const double x = dist(rng);
      auto it = std::upper_bound(merged.begin(), merged.end(), std::pair(x, std::numeric_limits<double>::infinity()));
      if (it != merged.begin() && x <= std::prev(it)->second) ++hits;
    }
    rep.hit_fraction = static_cast<double>(hits) / static_cast<double>(samples);
    rep.expected_fraction = rep.union_measure / (2.0 * T);
    const double p = rep.expected_fraction;
    rep.binomial_sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Continued fractions.

struct Convergent {
  std::int64_t p = 0;
  std::int64_t q = 1;
};

/// Up to count convergents of A > 0. Stops early when the remainder vanishes
/// below 2^-(precision/2) or a denominator would overflow 2^62.
inline std::vector<Convergent> continued_fraction(const Real& A, int count) {
  if (!(A > 0.0)) throw DomainError("continued_fraction: A must be positive");
  const Precision P = A.precision();
  const Real eps = Real::pow2(-static_cast<long>(P / 2), P);
  std::vector<Convergent> out;
  // p_{-1}/q_{-1} = 1/0, p_{-2}/q_{-2} = 0/1
  __int128 p_prev = 1, q_prev = 0, p_prev2 = 0, q_prev2 = 1;
  Real x = A;
  for (int j = 0; j < count; ++j) {
    const Real a_real = floor(x);
    const __int128 a = a_real.to_long_floor();
    const __int128 p = a * p_prev + p_prev2;
    const __int128 q = a * q_prev + q_prev2;
    if (q > (static_cast<__int128>(1) << 62) || p > (static_cast<__int128>(1) << 62)) break;
    out.push_back({static_cast<std::int64_t>(p), static_cast<std::int64_t>(q)});
    p_prev2 = p_prev;
    q_prev2 = q_prev;
    p_prev = p;
    q_prev = q;
    const Real frac = x - a_real;
    if (frac <= eps) break;
    x = 1.0 / frac;
  }
  return out;
}

/// A convergent with q <= q_max matching A to 2^-(precision/2), if any.
inline std::optional<Convergent> rationality_guard(const Real& A, std::int64_t q_max = 1000000) {
  const Precision P = A.precision();
  const Real eps = Real::pow2(-static_cast<long>(P / 2), P);
  for (const Convergent& c : continued_fraction(abs(A), 64)) {
    if (c.q > q_max) break;
    if (abs(abs(A) - Real(static_cast<long>(c.p), P) / Real(static_cast<long>(c.q), P)) < eps) return c;
  }
  return std::nullopt;
}

}  // namespace heartlab::arith
