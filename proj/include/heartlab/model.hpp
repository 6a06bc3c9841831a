#pragma once

// The standard one-parameter family in its concrete model form.
//
//   F_eps(x) = C2^-1 x^nu - eps       (whole polycycle, forward time, x-chart)
//   G_eps(y) = C1^(-1/lambda) y^(1/lambda) - eps   (loop, reversed time, y-chart)
//   rho(eps) = eps,  nu = lambda^2 mu
//
// Points on the winding side of the transversal are positive; the gap is
// [-rho, 0] in either chart and the charts are related by y = -rho - x.
// All coordinates are carried in log scale and the parameter in the chart
// sigma = ln(-ln eps).

#include <optional>
#include <string>
#include <utility>

#include "heartlab/kernel.hpp"

namespace heartlab::model {

struct FamilyParams {
  Real lambda;
  Real mu;
  Real ln_B1;
  Real ln_B2;
  Real ln_C1;
  Real ln_C2;

  Precision precision() const { return lambda.precision(); }

  Real B1() const { return exp(ln_B1); }
  Real B2() const { return exp(ln_B2); }
  Real C1() const { return exp(ln_C1); }
  Real C2() const { return exp(ln_C2); }

  /// Same tuple re-rounded to another working precision.
  FamilyParams with_precision(Precision p) const {
    return {lambda.with_precision(p), mu.with_precision(p), ln_B1.with_precision(p),
            ln_B2.with_precision(p),  ln_C1.with_precision(p), ln_C2.with_precision(p)};
  }
};

struct Derived {
  Real nu;
  Real gamma;
  Real beta;
  Real A;
  std::optional<Real> s_paper;  // undefined when a log argument is non-positive
  Real s_model;
  std::optional<Real> tau_paper;
  Real tau_model;
  Real c_E;
  Real c_I;
  Real w_E;  // ln C2 / (nu - 1): fixed point of the unperturbed log-chart map
  Real w_I;  // ln C1 / (1 - lambda)
};

/// Checks the standing inequalities; throws ParamError naming the first failure.
inline void validate(const FamilyParams& p) {
  if (!(p.lambda > 0.0)) throw ParamError("lambda > 0 violated");
  if (!(p.lambda < 1.0)) throw ParamError("lambda < 1 violated");
  if (!(p.mu > 0.0)) throw ParamError("mu > 0 violated");
  const Real nu = p.lambda * p.lambda * p.mu;
  if (!(nu > 1.0)) throw ParamError("lambda^2 mu > 1 violated (lambda^2 mu = " + nu.to_string(12) + ")");
  for (const Real* v : {&p.ln_B1, &p.ln_B2, &p.ln_C1, &p.ln_C2}) {
    if (!v->is_finite()) throw ParamError("B_i, C_i must be positive and finite");
  }
  const Real w_I = p.ln_C1 / (1.0 - p.lambda);
  if (!(p.ln_B1 < w_I)) {
    throw ParamError("winding admissibility ln B1 < ln C1/(1-lambda) violated");
  }
  const Real w_E = p.ln_C2 / (nu - 1.0);
  if (!(p.ln_B2 < w_E)) {
    throw ParamError("winding admissibility ln B2 < ln C2/(lambda^2 mu - 1) violated");
  }
}

inline Derived derive(const FamilyParams& p) {
  validate(p);
  Derived d;
  d.nu = p.lambda * p.lambda * p.mu;
  d.gamma = log(d.nu);
  d.beta = -log(p.lambda);
  d.A = d.beta / d.gamma;
  d.w_I = p.ln_C1 / (1.0 - p.lambda);
  d.w_E = p.ln_C2 / (d.nu - 1.0);
  d.c_I = log(d.w_I - p.ln_B1);
  d.c_E = log(d.w_E - p.ln_B2);
  d.s_model = d.c_I - d.c_E;
  d.tau_model = d.s_model / d.gamma;
  const Real paper_outer = p.ln_C2 / (1.0 - 1.0 / d.nu) - p.ln_B2;
  if (paper_outer > 0.0) {
    d.s_paper = d.c_I - log(paper_outer);
    d.tau_paper = *d.s_paper / d.gamma;
  }
  return d;
}

// ---------------------------------------------------------------------------

struct SigmaParam {
  Real sigma;

  /// ln eps = -e^sigma.
  Real ln_eps() const { return -exp(sigma); }
  LnValue eps() const { return LnValue::positive(ln_eps()); }

  static SigmaParam from_ln_eps(const Real& ln_eps) {
    if (!(ln_eps < 0.0)) throw DomainError("eps must lie in (0, 1)");
    return {log(-ln_eps)};
  }
};

/// Gap size; ln rho = ln eps = -e^sigma.
inline LnValue rho(const SigmaParam& s) { return s.eps(); }

enum class MapKind { F, G };

inline const char* to_string(MapKind m) { return m == MapKind::F ? "F" : "G"; }

/// A power map x -> e^offset * x^exponent followed by subtraction of eps.
///
/// The log-scale pre-subtraction value is exponent * ln x + offset.
struct PowerMap {
  Real exponent;
  Real offset;
  Real ln_start;  // ln B2 for F, ln B1 for G

  static PowerMap of(MapKind kind, const FamilyParams& p) {
    if (kind == MapKind::F) {
      return {p.lambda * p.lambda * p.mu, -p.ln_C2, p.ln_B2};
    }
    const Real inv = 1.0 / p.lambda;
    return {inv, -p.ln_C1 * inv, p.ln_B1};
  }

  /// ln of the pre-subtraction value for a positive point.
  Real pre_log(const Real& ln_x) const { return exponent * ln_x + offset; }

  /// One application with eps given in log scale (nullopt for eps = 0).
  LnValue step(const LnValue& x, const std::optional<Real>& ln_eps) const {
    if (x.is_negative()) throw DomainError("step map is defined on the winding side only (x >= 0)");
    if (!ln_eps) {
      if (x.is_zero()) return x;
      return LnValue::positive(pre_log(x.ln_abs));
    }
    if (x.is_zero()) return LnValue::negative(*ln_eps);
    return ln_add(LnValue::positive(pre_log(x.ln_abs)), LnValue::negative(*ln_eps));
  }
};

/// F_eps in the x-chart.
inline LnValue F_step(const LnValue& ln_x, const SigmaParam& s, const FamilyParams& p) {
  return PowerMap::of(MapKind::F, p).step(ln_x, s.ln_eps());
}

/// G_eps in the y-chart.
inline LnValue G_step(const LnValue& ln_y, const SigmaParam& s, const FamilyParams& p) {
  return PowerMap::of(MapKind::G, p).step(ln_y, s.ln_eps());
}

/// Unperturbed maps (eps = 0).
inline LnValue F0_step(const LnValue& ln_x, const FamilyParams& p) {
  return PowerMap::of(MapKind::F, p).step(ln_x, std::nullopt);
}

inline LnValue G0_step(const LnValue& ln_y, const FamilyParams& p) {
  return PowerMap::of(MapKind::G, p).step(ln_y, std::nullopt);
}

struct GapLanding {
  LnValue position;  // in [-rho, 0]
  int turns = 0;
  bool exact_zero = false;
};

/// True when |x| <= rho * 2^-(precision/2): the landing is a connection.
inline bool is_degenerate_zero(const LnValue& x, const Real& ln_rho) {
  if (x.is_zero()) return true;
  const long half = static_cast<long>(ln_rho.precision() / 2);
  return x.ln_abs <= ln_rho - Real(static_cast<double>(half), ln_rho.precision()) *
                                  Real::ln2(ln_rho.precision());
}

/// Iterates the chosen step map from B2 (F) or B1 (G) until the orbit reaches
/// the gap; the turn count is the number of applications.
inline GapLanding wind(MapKind kind, const SigmaParam& s, const FamilyParams& p, int max_turns) {
  if (max_turns < 1) throw DomainError("wind: max_turns must be >= 1");
  const PowerMap map = PowerMap::of(kind, p);
  const Real ln_eps = s.ln_eps();
  LnValue x = LnValue::positive(map.ln_start);
  for (int n = 1; n <= max_turns; ++n) {
    x = map.step(x, ln_eps);
    const bool degenerate = is_degenerate_zero(x, ln_eps);
    if (!x.is_positive() || degenerate) {
      return {degenerate ? LnValue::zero(ln_eps.precision()) : std::move(x), n, degenerate};
    }
  }
  throw DepthError(std::string("wind(") + to_string(kind) + "): no gap landing within " +
                   std::to_string(max_turns) + " turns; raise the turn budget and precision");
}

/// y = -rho - x.
inline LnValue coordinate_change(const LnValue& x, const SigmaParam& s) {
  return ln_add(LnValue::negative(s.ln_eps()), -x);
}

}  // namespace heartlab::model
