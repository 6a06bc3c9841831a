#pragma once

// Extended-precision scalars, signed log-scale values and the monotone
// bisection root finder.
//
// Every arithmetic operation and elementary function below maps onto a single
// MPFR call in round-to-nearest mode, so results are correctly rounded at the
// precision of the result. Binary operations take the larger of the two
// operand precisions; operations mixing a Real with a double keep the Real's
// precision (doubles are exact at any precision >= 53 bits).

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>

#include "heartlab/errors.hpp"

namespace heartlab {

using Precision = mpfr_prec_t;

inline constexpr Precision kDefaultPrecision = 256;

namespace detail {

// MPFR keeps the exponent range per thread (when built with TLS). Widen it to
// the maximum once per thread before the first value is created there.
inline void ensure_exponent_range() {
  thread_local const bool widened = [] {
    mpfr_set_emin(mpfr_get_emin_min());
    mpfr_set_emax(mpfr_get_emax_max());
    return true;
  }();
  (void)widened;
}

}  // namespace detail

class Real {
 public:
  Real() : Real(0.0) {}

  explicit Real(double value, Precision precision = kDefaultPrecision) {
    init(precision);
    mpfr_set_d(v_, value, MPFR_RNDN);
  }

  Real(long value, Precision precision) {
    init(precision);
    mpfr_set_si(v_, value, MPFR_RNDN);
  }

  Real(const Real& other) {
    init(other.precision());
    mpfr_set(v_, other.v_, MPFR_RNDN);
  }

  Real(Real&& other) noexcept {
    init(other.precision());
    mpfr_swap(v_, other.v_);
  }

  Real& operator=(const Real& other) {
    if (this != &other) {
      mpfr_set_prec(v_, other.precision());
      mpfr_set(v_, other.v_, MPFR_RNDN);
    }
    return *this;
  }

  Real& operator=(Real&& other) noexcept {
    mpfr_swap(v_, other.v_);
    return *this;
  }

  ~Real() { mpfr_clear(v_); }

  /// Parses a decimal (or "inf"/"nan") string exactly rounded to `precision`.
  static Real parse(std::string_view text, Precision precision = kDefaultPrecision) {
    Real r(0.0, precision);
    std::string buf(text);
    if (buf.empty()) throw DomainError("empty numeric string");
    char* end = nullptr;
    mpfr_strtofr(r.v_, buf.c_str(), &end, 10, MPFR_RNDN);
    if (end == buf.c_str() || *end != '\0') {
      throw DomainError("not a decimal number: '" + buf + "'");
    }
    return r;
  }

  static Real ln2(Precision precision) {
    Real r(0.0, precision);
    mpfr_const_log2(r.v_, MPFR_RNDN);
    return r;
  }

  static Real pi(Precision precision) {
    Real r(0.0, precision);
    mpfr_const_pi(r.v_, MPFR_RNDN);
    return r;
  }

  static Real infinity(int sign, Precision precision) {
    Real r(0.0, precision);
    mpfr_set_inf(r.v_, sign);
    return r;
  }

  /// 2^exponent, exact.
  static Real pow2(long exponent, Precision precision) {
    Real r(1.0, precision);
    mpfr_mul_2si(r.v_, r.v_, exponent, MPFR_RNDN);
    return r;
  }

  Precision precision() const { return mpfr_get_prec(v_); }

  Real with_precision(Precision precision) const {
    Real r(0.0, precision);
    mpfr_set(r.v_, v_, MPFR_RNDN);
    return r;
  }

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  long to_long_floor() const { return mpfr_get_si(v_, MPFR_RNDD); }

  /// Scientific notation with `digits` significant digits; deterministic.
  std::string to_string(int digits = 30) const {
    if (mpfr_nan_p(v_)) return "nan";
    if (mpfr_inf_p(v_)) return mpfr_sgn(v_) > 0 ? "inf" : "-inf";
    char* raw = nullptr;
    mpfr_asprintf(&raw, "%.*Re", std::max(digits - 1, 0), v_);
    std::string out(raw);
    mpfr_free_str(raw);
    return out;
  }

  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }
  bool is_nan() const { return mpfr_nan_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }

  /// Binary exponent e such that |x| = m * 2^e with m in [1/2, 1).
  long exponent() const { return mpfr_get_exp(v_); }

  mpfr_srcptr raw() const { return v_; }
  mpfr_ptr raw() { return v_; }

  Real operator-() const {
    Real r(0.0, precision());
    mpfr_neg(r.v_, v_, MPFR_RNDN);
    return r;
  }

  Real& operator+=(const Real& o) { return *this = *this + o; }
  Real& operator-=(const Real& o) { return *this = *this - o; }
  Real& operator*=(const Real& o) { return *this = *this * o; }
  Real& operator/=(const Real& o) { return *this = *this / o; }

#define HEARTLAB_REAL_BINOP(op, fn, fn_d, fn_d_rev)                        \
  friend Real operator op(const Real& a, const Real& b) {                  \
    Real r(0.0, std::max(a.precision(), b.precision()));                   \
    fn(r.v_, a.v_, b.v_, MPFR_RNDN);                                       \
    return r;                                                              \
  }                                                                        \
  friend Real operator op(const Real& a, double b) {                       \
    Real r(0.0, a.precision());                                            \
    fn_d(r.v_, a.v_, b, MPFR_RNDN);                                        \
    return r;                                                              \
  }                                                                        \
  friend Real operator op(double a, const Real& b) {                       \
    Real r(0.0, b.precision());                                            \
    fn_d_rev(r.v_, a, b.v_, MPFR_RNDN);                                    \
    return r;                                                              \
  }

  HEARTLAB_REAL_BINOP(+, mpfr_add, mpfr_add_d, detail_d_add)
  HEARTLAB_REAL_BINOP(-, mpfr_sub, mpfr_sub_d, mpfr_d_sub)
  HEARTLAB_REAL_BINOP(*, mpfr_mul, mpfr_mul_d, detail_d_mul)
  HEARTLAB_REAL_BINOP(/, mpfr_div, mpfr_div_d, mpfr_d_div)
#undef HEARTLAB_REAL_BINOP

  friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend bool operator==(const Real& a, double b) { return mpfr_cmp_d(a.v_, b) == 0 && !a.is_nan(); }
  friend std::partial_ordering operator<=>(const Real& a, const Real& b) {
    if (a.is_nan() || b.is_nan()) return std::partial_ordering::unordered;
    const int c = mpfr_cmp(a.v_, b.v_);
    return c < 0 ? std::partial_ordering::less
                 : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
  }
  friend std::partial_ordering operator<=>(const Real& a, double b) {
    if (a.is_nan() || std::isnan(b)) return std::partial_ordering::unordered;
    const int c = mpfr_cmp_d(a.v_, b);
    return c < 0 ? std::partial_ordering::less
                 : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
  }

  friend std::ostream& operator<<(std::ostream& os, const Real& x) { return os << x.to_string(); }

#define HEARTLAB_REAL_UNARY(name, fn)          \
  friend Real name(const Real& x) {            \
    Real r(0.0, x.precision());                \
    fn(r.v_, x.v_, MPFR_RNDN);                 \
    return r;                                  \
  }

  HEARTLAB_REAL_UNARY(exp, mpfr_exp)
  HEARTLAB_REAL_UNARY(log, mpfr_log)
  HEARTLAB_REAL_UNARY(log1p, mpfr_log1p)
  HEARTLAB_REAL_UNARY(expm1, mpfr_expm1)
  HEARTLAB_REAL_UNARY(sqrt, mpfr_sqrt)
  HEARTLAB_REAL_UNARY(abs, mpfr_abs)
#undef HEARTLAB_REAL_UNARY

  friend Real floor(const Real& x) {
    Real r(0.0, x.precision());
    mpfr_floor(r.v_, x.v_);
    return r;
  }

  friend Real ceil(const Real& x) {
    Real r(0.0, x.precision());
    mpfr_ceil(r.v_, x.v_);
    return r;
  }

  friend Real pow(const Real& x, const Real& y) {
    Real r(0.0, std::max(x.precision(), y.precision()));
    mpfr_pow(r.v_, x.v_, y.v_, MPFR_RNDN);
    return r;
  }

  /// x * 2^k, exact.
  friend Real ldexp(const Real& x, long k) {
    Real r(0.0, x.precision());
    mpfr_mul_2si(r.v_, x.v_, k, MPFR_RNDN);
    return r;
  }

 private:
  void init(Precision precision) {
    detail::ensure_exponent_range();
    mpfr_init2(v_, std::clamp<Precision>(precision, MPFR_PREC_MIN, MPFR_PREC_MAX));
  }

  static int detail_d_add(mpfr_ptr r, double a, mpfr_srcptr b, mpfr_rnd_t rnd) {
    return mpfr_add_d(r, b, a, rnd);
  }
  static int detail_d_mul(mpfr_ptr r, double a, mpfr_srcptr b, mpfr_rnd_t rnd) {
    return mpfr_mul_d(r, b, a, rnd);
  }

  mpfr_t v_;
};

inline Real min(const Real& a, const Real& b) { return a < b ? a : b; }
inline Real max(const Real& a, const Real& b) { return a < b ? b : a; }

/// Unit in the last place of x at its own precision.
inline Real ulp(const Real& x) {
  if (x.is_zero()) return Real::pow2(mpfr_get_emin(), x.precision());
  return Real::pow2(x.exponent() - static_cast<long>(x.precision()), x.precision());
}

// ---------------------------------------------------------------------------
// Signed log-scale values.

enum class Sign : int { negative = -1, zero = 0, positive = 1 };

inline Sign flip(Sign s) { return static_cast<Sign>(-static_cast<int>(s)); }

/// A real number stored as (sign, ln|x|). `ln_abs` is ignored when sign is zero.
struct LnValue {
  Sign sign = Sign::zero;
  Real ln_abs;

  static LnValue positive(Real ln) { return {Sign::positive, std::move(ln)}; }
  static LnValue negative(Real ln) { return {Sign::negative, std::move(ln)}; }
  static LnValue zero(Precision precision = kDefaultPrecision) {
    return {Sign::zero, Real::infinity(-1, precision)};
  }

  /// Converts a plain Real; exact sign, correctly rounded logarithm.
  static LnValue from_real(const Real& x) {
    if (x.is_zero()) return zero(x.precision());
    return {x.sign() > 0 ? Sign::positive : Sign::negative, log(abs(x))};
  }

  bool is_positive() const { return sign == Sign::positive; }
  bool is_negative() const { return sign == Sign::negative; }
  bool is_zero() const { return sign == Sign::zero; }

  LnValue operator-() const { return {flip(sign), ln_abs}; }

  /// exp back to a plain Real (may underflow to the MPFR minimum exponent).
  Real to_real() const {
    if (sign == Sign::zero) return Real(0.0, ln_abs.precision());
    Real m = exp(ln_abs);
    return sign == Sign::negative ? -m : m;
  }
};

/// ln(1 - e^t) for t < 0, choosing the branch that avoids cancellation.
inline Real log1mexp(const Real& t) {
  if (t >= 0.0) throw DomainError("log1mexp requires a negative argument");
  static constexpr double kMinusLn2 = -0.69314718055994530942;
  if (t > kMinusLn2) return log(-expm1(t));
  return log1p(-exp(t));
}

/// ln(e^a + e^b) for finite or -inf arguments.
inline Real log_add_exp(const Real& a, const Real& b) {
  if (!a.is_finite() && a < 0.0) return b;
  if (!b.is_finite() && b < 0.0) return a;
  const Real& hi = a < b ? b : a;
  const Real& lo = a < b ? a : b;
  return hi + log1p(exp(lo - hi));
}

/// ln(e^a - e^b) for positive a, b with a > b (b may be the zero value).
inline LnValue ln_diff(const LnValue& a, const LnValue& b) {
  if (!a.is_positive()) throw DomainError("ln_diff: minuend must be positive");
  if (b.is_negative()) throw DomainError("ln_diff: subtrahend must be positive or zero");
  if (b.is_zero()) return a;
  if (!(a.ln_abs > b.ln_abs)) {
    throw DomainError("ln_diff: sign domain violated (a <= b); caller must flip the sign");
  }
  return LnValue::positive(a.ln_abs + log1mexp(b.ln_abs - a.ln_abs));
}

/// Exact-sign sum of two log-scale values.
inline LnValue ln_add(const LnValue& a, const LnValue& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.sign == b.sign) return {a.sign, log_add_exp(a.ln_abs, b.ln_abs)};
  const int c = mpfr_cmp(a.ln_abs.raw(), b.ln_abs.raw());
  if (c == 0) return LnValue::zero(std::max(a.ln_abs.precision(), b.ln_abs.precision()));
  const LnValue& big = c > 0 ? a : b;
  const LnValue& small = c > 0 ? b : a;
  LnValue mag = ln_diff(LnValue::positive(big.ln_abs), LnValue::positive(small.ln_abs));
  mag.sign = big.sign;
  return mag;
}

// ---------------------------------------------------------------------------
// Precision budgeting and root finding.

/// Working bits needed so that error amplification exp(gamma)^depth over
/// `depth` map iterations stays 64 bits below the working precision.
inline Precision required_precision(long depth, const Real& gamma) {
  if (depth < 1) throw DomainError("required_precision: depth must be >= 1");
  if (!(gamma > 0.0)) throw DomainError("required_precision: gamma must be positive");
  const Real bits = ceil(Real(static_cast<double>(depth + 5), gamma.precision()) * gamma /
                         Real::ln2(gamma.precision()));
  return static_cast<Precision>(bits.to_long_floor()) + 64;
}

inline constexpr double kDefaultSigmaTolerance = 1e-24;

struct BisectResult {
  Real root;
  Real lo;
  Real hi;
  int steps = 0;
};

/// Bisection on a continuous strictly monotone f with f(lo) f(hi) < 0.
///
/// Stops when the bracket is no wider than `tol`; the returned root is the
/// bracket midpoint. Only the sign of f is used.
template <class F>
BisectResult bisect_bracket(F&& f, Real lo, Real hi, const Real& tol) {
  if (!(tol > 0.0)) throw DomainError("bisect_monotone: tolerance must be positive");
  if (!(lo < hi)) throw DomainError("bisect_monotone: requires lo < hi");
  Real f_lo = f(lo);
  Real f_hi = f(hi);
  if (f_lo.is_nan() || f_hi.is_nan()) throw DomainError("bisect_monotone: f is NaN at an endpoint");
  if (f_lo.is_zero()) return {lo, lo, lo, 0};
  if (f_hi.is_zero()) return {hi, hi, hi, 0};
  if (f_lo.sign() == f_hi.sign()) {
    throw BracketError("bisect_monotone: no sign change across bracket", f_lo.to_string(12),
                       f_hi.to_string(12));
  }
  const int lo_sign = f_lo.sign();
  int steps = 0;
  // Bisection halves the bracket each step; the cap only guards against a
  // tolerance below the representable spacing.
  const int max_steps = static_cast<int>(lo.precision()) + 4096;
  while (hi - lo > tol && steps < max_steps) {
    Real mid = ldexp(lo + hi, -1);
    if (!(mid > lo && mid < hi)) break;
    Real f_mid = f(mid);
    ++steps;
    if (f_mid.is_zero()) return {mid, mid, mid, steps};
    if (f_mid.sign() == lo_sign) {
      lo = std::move(mid);
    } else {
      hi = std::move(mid);
    }
  }
  Real root = ldexp(lo + hi, -1);
  return {std::move(root), std::move(lo), std::move(hi), steps};
}

template <class F>
Real bisect_monotone(F&& f, const Real& lo, const Real& hi, const Real& tol) {
  return bisect_bracket(std::forward<F>(f), lo, hi, tol).root;
}

}  // namespace heartlab
