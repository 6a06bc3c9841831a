#pragma once

// The acceptance criteria as executable checks. Each criterion reports a
// pass flag, a one-line detail and its wall time.

#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "heartlab/arithmetic.hpp"
#include "heartlab/bifurcations.hpp"
#include "heartlab/classify.hpp"
#include "heartlab/config.hpp"
#include "heartlab/lmf.hpp"
#include "heartlab/model.hpp"
#include "heartlab/orderings.hpp"

namespace heartlab::acceptance {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double limit = 0.0;  // 0: no runtime limit
};

inline model::FamilyParams family(const std::string& name, Precision P = kDefaultPrecision) {
  return config::builtin_family(name)->resolve(P);
}

namespace detail {

inline std::string sci(double x) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << x;
  return os.str();
}

inline std::vector<bif::ConnectionEvent> base_events(const model::FamilyParams& p, int depth) {
  bif::ScanOptions o;
  o.depth = depth;
  o.with_ei = false;
  return bif::scan(p, o).events;
}

/// Sign of d at sigma from the stop-rule landings of both separatrices;
/// 0 when either landing count differs from (n, k).
inline int landing_sign(const Real& sigma, int n, int k, const model::FamilyParams& p) {
  const model::SigmaParam s{sigma};
  const auto e = model::wind(model::MapKind::F, s, p, n + 1);
  const auto i = model::wind(model::MapKind::G, s, p, k + 1);
  if (e.turns != n || i.turns != k) return 0;
  const LnValue d = ln_add(ln_add(i.position, e.position), LnValue::positive(s.ln_eps()));
  return static_cast<int>(d.sign);
}

}  // namespace detail

inline CriterionResult ac1_invariants() {
  CriterionResult r{1, "invariants of P0", false, "", 0, 1.0};
  const auto d = model::derive(family("P0"));
  const Real ln2 = Real::ln2(kDefaultPrecision);
  const Real ln3 = log(Real(3.0));
  const double eA = abs(d.A - ln2 / ln3).to_double();
  const double es = abs(d.s_model - 2.0 * ln2).to_double();
  const double et = abs(d.tau_model - 2.0 * ln2 / ln3).to_double();
  r.pass = eA <= 1e-12 && es <= 1e-12 && et <= 1e-12;
  r.detail = "|dA|=" + detail::sci(eA) + " |ds|=" + detail::sci(es) + " |dtau|=" + detail::sci(et);
  return r;
}

inline CriterionResult ac2_progressions() {
  CriterionResult r{2, "perturbed progressions of P0", false, "", 0, 30.0};
  const auto p = family("P0");
  const Real ln2 = Real::ln2(kDefaultPrecision);
  const Real ln3 = log(Real(3.0));
  std::vector<bif::ConnectionEvent> le, li;
  for (int j = 15; j <= 26; ++j) {
    le.push_back(bif::locate_LE(j, p));
    li.push_back(bif::locate_LI(j, p));
  }
  double worst_e = 0, worst_i = 0;
  for (std::size_t j = 0; j + 1 < le.size(); ++j) {
    worst_e = std::max(worst_e, abs(le[j + 1].sigma - le[j].sigma - ln3).to_double());
    worst_i = std::max(worst_i, abs(li[j + 1].sigma - li[j].sigma - ln2).to_double());
  }
  const auto fe = bif::progression_fit(le);
  const auto fi = bif::progression_fit(li);
  const double ce = abs(fe.intercept + ln2).to_double();
  const double ci = abs(fi.intercept - ln2).to_double();
  r.pass = worst_e <= 1e-8 && worst_i <= 1e-8 && ce <= 1e-7 && ci <= 1e-7;
  r.detail = "max step error E " + detail::sci(worst_e) + ", I " + detail::sci(worst_i) + "; intercept error E " +
             detail::sci(ce) + ", I " + detail::sci(ci);
  return r;
}

inline CriterionResult ac3_one_ei_per_interval() {
  CriterionResult r{3, "one EI connection per gap interval (P0, 30 intervals)", false, "", 0, 0};
  const auto p = family("P0");
  const auto base = detail::base_events(p, 31);
  const Real tol(kDefaultSigmaTolerance, p.precision());
  int violations = 0;
  int unresolved = 0;
  std::string first;
  for (std::size_t j = 0; j + 1 < base.size(); ++j) {
    const auto [n, k] = bif::interval_counts(base, j);
    const Real& lo = base[j].sigma;
    const Real& hi = base[j + 1].sigma;
    constexpr int kGrid = 1000;
    std::vector<Real> xs;
    std::vector<int> signs;
    for (int g = 1; g <= kGrid; ++g) {
      xs.push_back(lo + (hi - lo) * Real(static_cast<long>(g), p.precision()) /
                            Real(static_cast<long>(kGrid + 1), p.precision()));
      signs.push_back(detail::landing_sign(xs.back(), n, k, p));
    }
    // Right end: the left limit at the event. The connecting separatrix sits on
    // the gap end, so d tends to the landing of the other one, which is positive
    // whenever that landing exists with the interval's count.
    xs.push_back(hi);
    {
      const model::SigmaParam s{hi};
      const bool e_connects = base[j + 1].mark == bif::Mark::LE;
      const auto other = e_connects ? model::wind(model::MapKind::G, s, p, k + 1)
                                    : model::wind(model::MapKind::F, s, p, n + 1);
      signs.push_back(other.turns == (e_connects ? k : n) ? 1 : 0);
    }
    int changes = 0;
    std::size_t at = 0;
    bool bad_sample = false;
    for (std::size_t t = 0; t < signs.size(); ++t) {
      if (signs[t] == 0) bad_sample = true;
      if (t > 0 && signs[t] != signs[t - 1]) {
        ++changes;
        at = t;
      }
    }
    bool inside = false;
    if (changes == 1 && !bad_sample) {
      const auto ei = bif::locate_EI(lo, hi, n, k, p);
      inside = ei.sigma >= xs[at - 1] && ei.sigma <= xs[at] && (at + 1 < xs.size() || ei.sigma <= hi);
      if (at + 1 == xs.size()) ++unresolved;
    }
    if (!(changes == 1 && !bad_sample && inside)) {
      ++violations;
      if (first.empty()) {
        first = " first at interval " + std::to_string(j) + " (n=" + std::to_string(n) + ", k=" + std::to_string(k) +
                ", sign changes " + std::to_string(changes) + ")";
      }
    }
  }
  r.pass = violations == 0 && base.size() == 31;
  r.detail = std::to_string(base.size() - 1) + " intervals, " + std::to_string(violations) + " violations; " +
             std::to_string(unresolved) + " roots lie in the last grid cell" + first;
  return r;
}

inline CriterionResult ac4_monotonicity() {
  CriterionResult r{4, "monotonicity of d, F^n, G^k in eps for 3 <= n,k <= 12", false, "", 0, 0};
  const auto spec = *config::builtin_family("P0");
  const auto p = spec.resolve(256);
  const auto q = spec.resolve(320);
  const auto base = detail::base_events(p, 31);
  int intervals = 0, samples = 0, failures = 0, disagreements = 0;
  double worst_rel = 0.0;
  for (std::size_t j = 0; j + 1 < base.size(); ++j) {
    const auto [n, k] = bif::interval_counts(base, j);
    if (n < 3 || k < 3 || n > 12 || k > 12) continue;
    ++intervals;
    std::vector<Real> sig;
    for (int t = 1; t <= 10; ++t) {
      sig.push_back(base[j].sigma + (base[j + 1].sigma - base[j].sigma) * Real(static_cast<long>(t), 256) /
                                        Real(11L, 256));
    }
    std::vector<Real> sig_q;
    for (const auto& s : sig) sig_q.push_back(s.with_precision(320));
    const auto a = bif::check_monotone_d(n, k, sig, p);
    const auto b = bif::check_monotone_d(n, k, sig_q, q);
    for (std::size_t t = 0; t < a.samples.size(); ++t) {
      ++samples;
      if (!a.samples[t].in_domain || !a.samples[t].holds) ++failures;
      for (auto [x, y] : {std::pair(a.samples[t].dd_deps, b.samples[t].dd_deps),
                          std::pair(a.samples[t].dF_deps, b.samples[t].dF_deps),
                          std::pair(a.samples[t].dG_deps, b.samples[t].dG_deps)}) {
        const double rel = std::fabs(x - y) / std::max(std::fabs(y), 1e-300);
        worst_rel = std::max(worst_rel, rel);
        if (!(rel <= 1e-6)) ++disagreements;
      }
    }
  }
  r.pass = intervals > 0 && failures == 0 && disagreements == 0;
  r.detail = std::to_string(intervals) + " intervals, " + std::to_string(samples) + " samples, " +
             std::to_string(failures) + " inequality failures, worst two-precision relative gap " +
             detail::sci(worst_rel);
  return r;
}

inline CriterionResult ac5_lemma1() {
  CriterionResult r{5, "lattice-shifted families have equivalent words with predicted drops", false, "", 0, 0};
  const auto p0 = family("P0");
  const auto a = ord::lemma1_experiment(p0, family("P1"));
  const auto b = ord::lemma1_experiment(p0, family("Pq"));
  auto show = [](const ord::Lemma1Report& x) {
    return std::string(ord::to_string(x.verdict.kind)) + " (" + std::to_string(x.observed.first) + "," +
           std::to_string(x.observed.second) + ")";
  };
  r.pass = a.verdict.equivalent() && a.observed == std::pair(1L, 0L) && a.agrees() && b.verdict.equivalent() &&
           b.observed == std::pair(0L, 1L) && b.agrees();
  r.detail = "P1: " + show(a) + ", Pq: " + show(b);
  return r;
}

inline CriterionResult ac6_only_if() {
  CriterionResult r{6, "non-lattice shift and mu perturbation are told apart", false, "", 0, 0};
  const auto p0 = family("P0");
  const auto a = ord::lemma1_experiment(p0, family("P2"));
  const auto c = classify::classify_pair(p0, family("Pmu"));
  const bool words_distinct = a.verdict.distinct();
  const bool mu_distinct = !c.weakly_equivalent() && c.reason == "A mismatch";
  r.pass = words_distinct && mu_distinct;
  r.detail = std::string("P2 words ") + ord::to_string(a.verdict.kind) + " (drops " + std::to_string(a.verdict.d1) +
             "," + std::to_string(a.verdict.d2) + "); Pmu " + classify::to_string(c.kind) + " by " + c.reason;
  return r;
}

inline CriterionResult ac7_lemma3() {
  CriterionResult r{7, "EI connections keep the equivalence (P0, P1)", false, "", 0, 0};
  const auto p0 = family("P0");
  const auto p1 = family("P1");
  ord::ExperimentOptions opt;
  const auto [ms1, ms2] = ord::scan_pair(p0, p1, opt);
  const auto l1 = ord::lemma1_from_scans(p0, p1, ms1, ms2, opt);
  if (!l1.verdict.equivalent()) {
    r.detail = "base words not equivalent";
    return r;
  }
  const auto l3 = ord::lemma3_extension(ms1, ms2, l1.verdict.d1, l1.verdict.d2);
  r.pass = l3.holds();
  r.detail = "full words " + std::string(ord::to_string(l3.verdict.kind)) + ", one-X violations " +
             std::to_string(l3.one_x_violations.size()) + ", overlap " + std::to_string(l3.verdict.overlap);
  return r;
}

inline CriterionResult ac8_diophantine() {
  CriterionResult r{8, "Diophantine stabilisation and measure decay", false, "", 0, 60.0};
  const Real A = (sqrt(Real(5.0)) - 1.0) / 2.0;
  const auto small = arith::diophantine_check(A, Real(1.0), Real(0.0), 100);
  const auto large = arith::diophantine_check(A, Real(1.0), Real(0.0), 500);
  bool same = small.violations.size() == large.violations.size();
  for (std::size_t j = 0; same && j < small.violations.size(); ++j) {
    same = small.violations[j].m == large.violations[j].m && small.violations[j].n == large.violations[j].n;
  }
  std::vector<arith::MeasureReport> reps;
  for (long N : {10L, 20L, 40L}) reps.push_back(arith::measure_experiment(1.0, 0.0, 1.0, N, 200000, 20240917));
  bool bounded = true, mc = true;
  for (const auto& m : reps) {
    bounded = bounded && m.within_bound();
    mc = mc && m.within_3_sigma();
  }
  const double r1 = reps[0].union_measure / reps[1].union_measure;
  const double r2 = reps[1].union_measure / reps[2].union_measure;
  r.pass = same && bounded && mc && r1 >= 1.8 && r2 >= 1.8;
  r.detail = std::to_string(small.violations.size()) + " violations at n_max 100 and " +
             std::to_string(large.violations.size()) + " at 500; decay ratios " + detail::sci(r1) + ", " +
             detail::sci(r2) + (bounded ? "; within bound" : "; bound exceeded") +
             (mc ? "; Monte-Carlo within 3 sigma" : "; Monte-Carlo off");
  return r;
}

inline CriterionResult ac9_lmf() {
  CriterionResult r{9, "LMF templates, surgery and relabelling", false, "", 0, 10.0};
  int invalid = 0, isotopic_pairs = 0, surgery_fail = 0, shuffle_fail = 0;
  const auto& regimes = lmf::all_regimes();
  std::vector<lmf::LmfGraph> t;
  for (auto reg : regimes) {
    t.push_back(lmf::make_template(reg));
    if (!lmf::validate(t.back()).empty()) ++invalid;
  }
  for (std::size_t a = 0; a < t.size(); ++a) {
    for (std::size_t b = a + 1; b < t.size(); ++b) isotopic_pairs += lmf::isotopic(t[a], t[b]).has_value();
  }
  for (auto m : {bif::Mark::LE, bif::Mark::LI, bif::Mark::EI}) {
    const auto s = lmf::surgery(lmf::make_template(lmf::Regime::PosEpsGeneric), m);
    if (!lmf::validate(s).empty() || !lmf::isotopic(s, lmf::make_template(lmf::regime_of(m)))) ++surgery_fail;
  }
  std::mt19937_64 rng(7);
  for (int c = 0; c < 20; ++c) {
    const std::size_t which = static_cast<std::size_t>(c) % t.size();
    const auto copy = lmf::shuffled(t[which], rng);
    bool ok = lmf::validate(copy).empty();
    for (std::size_t b = 0; b < t.size(); ++b) ok = ok && (lmf::isotopic(copy, t[b]).has_value() == (b == which));
    shuffle_fail += !ok;
  }
  r.pass = invalid == 0 && isotopic_pairs == 0 && surgery_fail == 0 && shuffle_fail == 0;
  r.detail = std::to_string(invalid) + " invalid templates, " + std::to_string(isotopic_pairs) +
             " isotopic pairs of 10, " + std::to_string(surgery_fail) + " surgery mismatches, " +
             std::to_string(shuffle_fail) + " of 20 shuffled copies misclassified";
  return r;
}

inline CriterionResult ac10_end_to_end() {
  CriterionResult r{10, "end-to-end classification, determinism, precision escalation", false, "", 0, 0};
  const auto s0 = *config::builtin_family("P0");
  const auto s1 = *config::builtin_family("P1");
  const auto s2 = *config::builtin_family("P2");
  const auto v01 = classify::classify_pair(s0.resolve(256), s1.resolve(256));
  const auto v02 = classify::classify_pair(s0.resolve(256), s2.resolve(256));
  const std::string j1 = classify::to_json(v01).dump();
  const std::string j1_again = classify::to_json(classify::classify_pair(s0.resolve(256), s1.resolve(256))).dump();
  const auto w01 = classify::classify_pair(s0.resolve(320), s1.resolve(320));
  const auto w02 = classify::classify_pair(s0.resolve(320), s2.resolve(320));

  double worst = 0.0;
  bool aligned = true;
  for (const auto* spec : {&s0, &s1}) {
    bif::ScanOptions o;
    o.depth = 30;
    const auto a = bif::scan(spec->resolve(256), o);
    const auto b = bif::scan(spec->resolve(320), o);
    if (a.events.size() != b.events.size()) {
      aligned = false;
      continue;
    }
    for (std::size_t j = 0; j < a.events.size(); ++j) {
      if (a.events[j].mark != b.events[j].mark) aligned = false;
      worst = std::max(worst, abs(a.events[j].sigma.with_precision(320) - b.events[j].sigma).to_double());
    }
  }
  const bool cert = v01.weakly_equivalent() && v01.certificates.size() == lmf::all_regimes().size();
  const bool verdicts_stable = v01.kind == w01.kind && v02.kind == w02.kind;
  r.pass = cert && !v02.weakly_equivalent() && j1 == j1_again && verdicts_stable && aligned &&
           worst <= std::ldexp(1.0, -100);
  r.detail = std::string("(P0,P1) ") + classify::to_string(v01.kind) + " with " +
             std::to_string(v01.certificates.size()) + " certificates; (P0,P2) " + classify::to_string(v02.kind) +
             " (" + v02.reason + "); repeat " + (j1 == j1_again ? "identical" : "differs") + "; +64 bits: verdicts " +
             (verdicts_stable ? "unchanged" : "changed") + ", max sigma shift " + detail::sci(worst);
  return r;
}

inline std::vector<std::function<CriterionResult()>> criteria() {
  return {ac1_invariants, ac2_progressions, ac3_one_ei_per_interval, ac4_monotonicity, ac5_lemma1,
          ac6_only_if,    ac7_lemma3,       ac8_diophantine,         ac9_lmf,          ac10_end_to_end};
}

/// Runs every criterion, printing one PASS/FAIL line each; true when all pass.
inline bool run_all(std::ostream& out, std::vector<CriterionResult>* results = nullptr) {
  bool all = true;
  for (const auto& c : criteria()) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = c();
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.limit > 0 && r.seconds > r.limit) {
      r.pass = false;
      r.detail += "; runtime limit exceeded";
    }
    all = all && r.pass;
    std::ostringstream secs;
    secs.precision(2);
    secs << std::fixed << r.seconds;
    out << (r.pass ? "PASS" : "FAIL") << " AC-" << r.id << " " << r.title << ": " << r.detail << " [" << secs.str()
        << " s]" << std::endl;
    if (results) results->push_back(std::move(r));
  }
  return all;
}

}  // namespace heartlab::acceptance
