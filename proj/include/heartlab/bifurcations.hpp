#pragma once

// Location of the sparkling saddle connections of the standard family.
//
// LE events e_n: the unstable separatrix of E reaches the gap endpoint x = 0
// after n turns. LI events i_k: the stable separatrix of I reaches y = 0 after
// k turns (reversed time). EI events: both separatrices land on the same gap
// point, i.e. d_{n,k} = 0 with d = y(G^k B1) + x(F^n B2) + rho.
//
// Root functions use formal iterates (the closed recursion without the
// stop-at-gap rule); winding counts use the stop rule. Both agree at roots.

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "heartlab/kernel.hpp"
#include "heartlab/model.hpp"

namespace heartlab::bif {

using model::FamilyParams;
using model::MapKind;
using model::PowerMap;
using model::SigmaParam;

enum class Mark { LE, LI, EI };

inline char letter(Mark m) {
  switch (m) {
    case Mark::LE: return 'E';
    case Mark::LI: return 'I';
    case Mark::EI: return 'X';
  }
  return '?';
}

inline const char* to_string(Mark m) {
  switch (m) {
    case Mark::LE: return "LE";
    case Mark::LI: return "LI";
    case Mark::EI: return "EI";
  }
  return "?";
}

struct ConnectionEvent {
  Real sigma;
  Mark mark = Mark::LE;
  std::optional<int> n;  // E-winding count
  std::optional<int> k;  // I-winding count
  // EI events whose distance to the next event is below the sigma resolution:
  // ln(sigma_next - sigma). The stored sigma then rounds onto the next event.
  std::optional<Real> ln_offset;

  /// LE events carry n only, LI events k only, EI events both.
  bool well_formed() const {
    switch (mark) {
      case Mark::LE: return n.has_value() && !k.has_value();
      case Mark::LI: return k.has_value() && !n.has_value();
      case Mark::EI: return n.has_value() && k.has_value();
    }
    return false;
  }
};

/// Strict sigma order, with an EI carrying an offset placed before the event it
/// is anchored to when both round to the same sigma.
inline bool precedes(const ConnectionEvent& a, const ConnectionEvent& b) {
  if (a.sigma < b.sigma) return true;
  if (b.sigma < a.sigma) return false;
  return a.ln_offset.has_value() && !b.ln_offset.has_value();
}

/// Sigma-sorted collection of connection events.
struct MarkedSequence {
  std::vector<ConnectionEvent> events;
  std::optional<Real> horizon;

  std::size_t depth() const { return events.size(); }

  bool strictly_increasing() const {
    for (std::size_t j = 1; j < events.size(); ++j) {
      if (!precedes(events[j - 1], events[j])) return false;
    }
    return true;
  }

  std::vector<ConnectionEvent> of_mark(Mark m) const {
    std::vector<ConnectionEvent> out;
    for (const auto& e : events) {
      if (e.mark == m) out.push_back(e);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Formal iterates.

struct FormalOrbit {
  bool defined = false;  // every intermediate point stayed on the winding side
  Real ln_pre;           // ln of C x^exponent before eps is subtracted (count >= 1)
  LnValue value;         // the count-th iterate, signed
};

/// count applications of the map from its start point, no stop rule.
inline FormalOrbit formal_iterate(const PowerMap& map, int count, const Real& ln_eps) {
  FormalOrbit orbit;
  LnValue x = LnValue::positive(map.ln_start);
  for (int j = 1; j <= count; ++j) {
    if (!x.is_positive()) return orbit;
    orbit.ln_pre = map.pre_log(x.ln_abs);
    x = ln_add(LnValue::positive(orbit.ln_pre), LnValue::negative(ln_eps));
  }
  orbit.defined = true;
  orbit.value = std::move(x);
  return orbit;
}

/// Root function for the index-th LE (F) or LI (G) connection:
/// ln(pre-value of the index-th iterate) - ln eps. Increasing in sigma;
/// negative wherever an earlier iterate has already left the winding side.
inline Real connection_root_fn(const PowerMap& map, int index, const Real& sigma) {
  const Real e_sigma = exp(sigma);
  FormalOrbit orbit = formal_iterate(map, index - 1, -e_sigma);
  if (!orbit.defined || !orbit.value.is_positive()) return Real(-1.0, sigma.precision());
  return map.pre_log(orbit.value.ln_abs) + e_sigma;
}

struct LocateOptions {
  double tol = kDefaultSigmaTolerance;
  int max_bracket_expansions = 64;
};

namespace detail {

inline ConnectionEvent locate_connection(MapKind kind, int index, const FamilyParams& p,
                                         const LocateOptions& opt) {
  if (!(opt.tol > 0.0)) throw DomainError("locate: tolerance must be positive");
  if (index < 1) throw DomainError("locate: index must be >= 1");
  const model::Derived d = model::derive(p);
  const Real& rate = kind == MapKind::F ? d.gamma : d.beta;
  const Real& intercept = kind == MapKind::F ? d.c_E : d.c_I;
  const Precision need = required_precision(index, rate);
  if (need > p.precision()) {
    throw DepthError(std::string("locate_") + (kind == MapKind::F ? "LE" : "LI") + "(" +
                     std::to_string(index) + ") needs " + std::to_string(need) +
                     " bits, working precision is " + std::to_string(p.precision()));
  }
  const PowerMap map = PowerMap::of(kind, p);
  auto f = [&](const Real& s) { return connection_root_fn(map, index, s); };

  const Real guess = Real(static_cast<long>(index), p.precision()) * rate + intercept;
  Real lo = guess - 0.45 * rate;
  Real hi = guess + 0.45 * rate;
  // Coarse pre-scan in steps of the common difference when the asymptotic
  // bracket misses (small indices).
  for (int j = 0; j < opt.max_bracket_expansions && f(lo).sign() > 0; ++j) lo -= rate;
  for (int j = 0; j < opt.max_bracket_expansions && f(hi).sign() < 0; ++j) hi += rate;

  ConnectionEvent ev;
  ev.sigma = bisect_monotone(f, lo, hi, Real(opt.tol, p.precision()));
  if (kind == MapKind::F) {
    ev.mark = Mark::LE;
    ev.n = index;
  } else {
    ev.mark = Mark::LI;
    ev.k = index;
  }
  return ev;
}

}  // namespace detail

/// sigma of the n-th LE connection: F^n(B2) = 0.
inline ConnectionEvent locate_LE(int n, const FamilyParams& p, const LocateOptions& opt = {}) {
  return detail::locate_connection(MapKind::F, n, p, opt);
}

/// sigma of the k-th LI connection: G^k(B1) = 0.
inline ConnectionEvent locate_LI(int k, const FamilyParams& p, const LocateOptions& opt = {}) {
  return detail::locate_connection(MapKind::G, k, p, opt);
}

// ---------------------------------------------------------------------------
// EI connections.

/// d_{n,k}(sigma) in the y-chart, signed log scale.
///
/// For n, k >= 1 the eps terms cancel symbolically:
/// d = C2^-1 x_{n-1}^nu + C1^(-1/lambda) y_{k-1}^(1/lambda) - eps.
inline LnValue d_value(int n, int k, const SigmaParam& s, const FamilyParams& p) {
  if (n < 0 || k < 0) throw DomainError("d: winding counts must be non-negative");
  const Real ln_eps = s.ln_eps();
  std::vector<Real> plus;
  std::vector<Real> minus;
  int eps_coeff = 1;
  auto contribute = [&](MapKind kind, int count) {
    const PowerMap map = PowerMap::of(kind, p);
    if (count == 0) {
      plus.push_back(map.ln_start);
      return;
    }
    FormalOrbit orbit = formal_iterate(map, count, ln_eps);
    if (!orbit.defined) {
      throw DomainError(std::string("d: formal iterate of ") + model::to_string(kind) +
                        " undefined at this sigma");
    }
    plus.push_back(orbit.ln_pre);
    --eps_coeff;
  };
  contribute(MapKind::F, n);
  contribute(MapKind::G, k);
  if (eps_coeff == 1) plus.push_back(ln_eps);
  if (eps_coeff == -1) minus.push_back(ln_eps);

  LnValue total = LnValue::zero(p.precision());
  for (const auto& t : plus) total = ln_add(total, LnValue::positive(t));
  for (const auto& t : minus) total = ln_add(total, LnValue::negative(t));
  return total;
}

/// Monotone sign-carrying surrogate of d used for bisection:
/// ln(positive part) - ln(negative part).
inline Real ei_root_fn(int n, int k, const Real& sigma, const FamilyParams& p) {
  const SigmaParam s{sigma};
  if (n >= 1 && k >= 1) {
    const Real ln_eps = s.ln_eps();
    FormalOrbit e = formal_iterate(PowerMap::of(MapKind::F, p), n, ln_eps);
    FormalOrbit i = formal_iterate(PowerMap::of(MapKind::G, p), k, ln_eps);
    if (!e.defined || !i.defined) throw DomainError("ei_root_fn: sigma outside the (n,k) validity interval");
    return log_add_exp(e.ln_pre, i.ln_pre) - ln_eps;
  }
  const LnValue dv = d_value(n, k, s, p);
  return Real(static_cast<double>(static_cast<int>(dv.sign)), p.precision());
}

/// d/dsigma of ln(pre-value of the index-th iterate) - ln eps, by the chain rule
/// through the formal recursion.
inline Real connection_root_slope(const PowerMap& map, int index, const Real& sigma) {
  const Precision P = sigma.precision();
  const Real e_sigma = exp(sigma);
  const Real ln_eps = -e_sigma;
  Real slope_pre(0.0, P);  // d ln a_j / dsigma, zero for the first iterate
  LnValue x = LnValue::positive(map.ln_start);
  for (int j = 1; j < index; ++j) {
    const Real ln_a = map.pre_log(x.ln_abs);
    x = ln_add(LnValue::positive(ln_a), LnValue::negative(ln_eps));
    if (!x.is_positive()) throw DomainError("connection_root_slope: sigma outside the validity interval");
    const Real dlnx = exp(ln_a - x.ln_abs) * slope_pre + exp(ln_eps - x.ln_abs) * e_sigma;
    slope_pre = map.exponent * dlnx;
  }
  return slope_pre + e_sigma;
}

/// The unique root of d_{n,k} inside (lo, hi).
///
/// The root sits at distance about exp(ln(a_L/eps)) / slope before hi, where L
/// is the separatrix whose connection is not at hi. Once that distance drops
/// below tol the root is taken from the linearisation at hi and the distance
/// is kept in ln_offset.
inline ConnectionEvent locate_EI(const Real& lo, const Real& hi, int n, int k, const FamilyParams& p,
                                 double tol = kDefaultSigmaTolerance) {
  if (!(tol > 0.0)) throw DomainError("locate_EI: tolerance must be positive");
  if (!(hi - lo > 2.0 * tol)) throw DomainError("locate_EI: degenerate interval");
  const Precision P = p.precision();
  const Real t(tol, P);
  auto f = [&](const Real& s) { return ei_root_fn(n, k, s, p); };
  ConnectionEvent ev;
  ev.mark = Mark::EI;
  ev.n = n;
  ev.k = k;

  const Real near_hi = hi - t;
  if (f(near_hi).sign() < 0 && n >= 1 && k >= 1) {
    const PowerMap fmap = PowerMap::of(MapKind::F, p);
    const PowerMap gmap = PowerMap::of(MapKind::G, p);
    const Real pe = connection_root_fn(fmap, n, hi);
    const Real pi = connection_root_fn(gmap, k, hi);
    const bool right_is_e = pe > pi;
    const Real slope = right_is_e ? connection_root_slope(fmap, n, hi) : connection_root_slope(gmap, k, hi);
    if (!(slope > 0.0)) throw DomainError("locate_EI: non-increasing root function at the interval end");
    const Real ln_offset = (right_is_e ? pi : pe) - log(slope);
    ev.sigma = hi - exp(ln_offset);
    ev.ln_offset = ln_offset;
    return ev;
  }
  try {
    ev.sigma = bisect_monotone(f, lo + t, near_hi, t);
  } catch (const BracketError& e) {
    throw BracketError("locate_EI(n=" + std::to_string(n) + ", k=" + std::to_string(k) +
                           "): Proposition-2 counterexample candidate on (" + lo.to_string(20) +
                           ", " + hi.to_string(20) + ")",
                       e.f_lo(), e.f_hi());
  }
  return ev;
}

// ---------------------------------------------------------------------------
// Full scans.

struct ScanOptions {
  std::optional<int> depth;          // number of LE/LI events to collect
  std::optional<Real> sigma_max;     // horizon
  double tol = kDefaultSigmaTolerance;
  bool with_ei = true;
};

/// Bits of the tie tolerance 2^-(precision/4).
inline Real tie_tolerance(Precision p) { return Real::pow2(-static_cast<long>(p / 4), p); }

/// Merged sigma-sorted LE/LI events with one EI event per gap interval.
inline MarkedSequence scan(const FamilyParams& p, const ScanOptions& opt) {
  if (!opt.depth && !opt.sigma_max) throw DomainError("scan: need a depth or a sigma horizon");
  if (opt.depth && *opt.depth < 0) throw DomainError("scan: depth must be non-negative");
  const LocateOptions lopt{opt.tol};
  const Real tie = tie_tolerance(p.precision());

  MarkedSequence out;
  out.horizon = opt.sigma_max;
  std::vector<ConnectionEvent> base;
  int n = 1;
  int k = 1;
  ConnectionEvent next_e = locate_LE(n, p, lopt);
  ConnectionEvent next_i = locate_LI(k, p, lopt);
  while (!opt.depth || static_cast<int>(base.size()) < *opt.depth) {
    if (abs(next_e.sigma - next_i.sigma) <= tie) {
      throw ResonanceError("scan: e_" + std::to_string(n) + " and i_" + std::to_string(k) +
                           " coincide within 2^-" + std::to_string(p.precision() / 4) +
                           " (sigma = " + next_e.sigma.to_string(25) +
                           "); the tuple is resonant or non-Diophantine");
    }
    const bool take_e = next_e.sigma < next_i.sigma;
    const Real& s = take_e ? next_e.sigma : next_i.sigma;
    if (opt.sigma_max && s > *opt.sigma_max) break;
    if (take_e) {
      base.push_back(std::move(next_e));
      next_e = locate_LE(++n, p, lopt);
    } else {
      base.push_back(std::move(next_i));
      next_i = locate_LI(++k, p, lopt);
    }
  }

  int e_count = 0;
  int i_count = 0;
  for (std::size_t j = 0; j < base.size(); ++j) {
    (base[j].mark == Mark::LE ? e_count : i_count) += 1;
    out.events.push_back(base[j]);
    if (opt.with_ei && j + 1 < base.size()) {
      out.events.push_back(locate_EI(base[j].sigma, base[j + 1].sigma, e_count + 1, i_count + 1, p, opt.tol));
    }
  }
  return out;
}

/// Winding counts (n, k) valid on the open interval following event j of a
/// merged LE/LI list.
inline std::pair<int, int> interval_counts(const std::vector<ConnectionEvent>& base, std::size_t j) {
  int e = 0;
  int i = 0;
  for (std::size_t t = 0; t <= j && t < base.size(); ++t) {
    if (base[t].mark == Mark::LE) ++e;
    if (base[t].mark == Mark::LI) ++i;
  }
  return {e + 1, i + 1};
}

// ---------------------------------------------------------------------------
// Progression fits.

struct ProgressionFit {
  Real common_difference;
  Real intercept;
  std::vector<Real> residuals;
  int first_index = 0;
  int last_index = 0;

  /// |r_j| non-increasing over the fitted range.
  bool residuals_decay() const {
    for (std::size_t j = 1; j < residuals.size(); ++j) {
      if (abs(residuals[j]) > abs(residuals[j - 1])) return false;
    }
    return true;
  }
};

inline int event_index(const ConnectionEvent& e) {
  if (e.mark == Mark::LE) return *e.n;
  if (e.mark == Mark::LI) return *e.k;
  throw DomainError("progression_fit: EI events do not form a progression");
}

/// Difference and intercept from the last two events; residuals for all.
inline ProgressionFit progression_fit(const std::vector<ConnectionEvent>& events) {
  if (events.size() < 4) throw DomainError("progression_fit: at least 4 events required");
  const Mark m = events.front().mark;
  for (const auto& e : events) {
    if (e.mark != m) throw DomainError("progression_fit: events must share one mark");
  }
  const auto& last = events.back();
  const auto& prev = events[events.size() - 2];
  const int j_last = event_index(last);
  const int j_prev = event_index(prev);
  if (j_last == j_prev) throw DomainError("progression_fit: repeated index");
  ProgressionFit fit;
  const Precision P = last.sigma.precision();
  fit.common_difference = (last.sigma - prev.sigma) / Real(static_cast<long>(j_last - j_prev), P);
  fit.intercept = last.sigma - Real(static_cast<long>(j_last), P) * fit.common_difference;
  fit.first_index = event_index(events.front());
  fit.last_index = j_last;
  for (const auto& e : events) {
    fit.residuals.push_back(e.sigma - (Real(static_cast<long>(event_index(e)), P) * fit.common_difference +
                                       fit.intercept));
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Monotonicity of d in eps.

struct MonotoneSample {
  Real sigma;
  bool in_domain = false;
  double dd_deps = 0.0;  // d'(eps)
  double dF_deps = 0.0;  // d/deps F^n(B2)
  double dG_deps = 0.0;  // d/deps G^k(B1)
  bool holds = false;    // dd < -1/2, dF < -3/4, dG < -3/4
};

struct MonotoneReport {
  int n = 0;
  int k = 0;
  std::vector<MonotoneSample> samples;

  bool all_hold() const {
    return std::all_of(samples.begin(), samples.end(),
                       [](const MonotoneSample& s) { return s.in_domain && s.holds; });
  }
  std::size_t out_of_domain() const {
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(),
                                                  [](const MonotoneSample& s) { return !s.in_domain; }));
  }
};

/// Model value of rho'(eps); the thresholds are -rho'/2 and -3 rho'/4.
inline constexpr double kRhoPrime = 1.0;

/// Central finite differences in eps at relative step eta.
inline MonotoneReport check_monotone_d(int n, int k, const std::vector<Real>& sigma_samples, const FamilyParams& p,
                                       double eta = 1e-10) {
  if (n < 2 || k < 2) throw DomainError("check_monotone_d: requires n, k >= 2");
  MonotoneReport report{n, k, {}};
  const PowerMap fmap = PowerMap::of(MapKind::F, p);
  const PowerMap gmap = PowerMap::of(MapKind::G, p);
  const Precision P = p.precision();
  for (const Real& sigma : sigma_samples) {
    MonotoneSample out;
    out.sigma = sigma;
    const SigmaParam s0{sigma};
    const int budget = std::max(n, k) + 2;
    const model::GapLanding le = model::wind(MapKind::F, s0, p, budget);
    const model::GapLanding li = model::wind(MapKind::G, s0, p, budget);
    out.in_domain = le.turns == n && li.turns == k && !le.exact_zero && !li.exact_zero;
    if (!out.in_domain) {
      report.samples.push_back(std::move(out));
      continue;
    }
    const Real ln_eps0 = s0.ln_eps();
    // sigma at eps0 (1 +/- eta).
    const Real ln_plus = ln_eps0 + log1p(Real(eta, P));
    const Real ln_minus = ln_eps0 + log1p(Real(-eta, P));
    auto scaled = [&](const LnValue& v) {
      // value / eps0 as a double-range Real
      if (v.is_zero()) return Real(0.0, P);
      Real m = exp(v.ln_abs - ln_eps0);
      return v.is_negative() ? -m : m;
    };
    auto eval = [&](const Real& ln_eps, Real& d, Real& f, Real& g) {
      const SigmaParam s = SigmaParam::from_ln_eps(ln_eps);
      d = scaled(d_value(n, k, s, p));
      f = scaled(formal_iterate(fmap, n, ln_eps).value);
      g = scaled(formal_iterate(gmap, k, ln_eps).value);
    };
    Real dp, fp, gp, dm, fm, gm;
    eval(ln_plus, dp, fp, gp);
    eval(ln_minus, dm, fm, gm);
    const double denom = 2.0 * eta;
    out.dd_deps = ((dp - dm) / denom).to_double();
    out.dF_deps = ((fp - fm) / denom).to_double();
    out.dG_deps = ((gp - gm) / denom).to_double();
    out.holds = out.dd_deps < -kRhoPrime / 2 && out.dF_deps < -0.75 * kRhoPrime &&
                out.dG_deps < -0.75 * kRhoPrime;
    report.samples.push_back(std::move(out));
  }
  return report;
}

}  // namespace heartlab::bif
