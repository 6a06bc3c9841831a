#pragma once

// Interleaving words of marked sequences, order equivalence with finitely many
// exceptions, the base homeomorphism between two families and the
// experiments comparing two families event by event.

#include <algorithm>
#include <future>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "heartlab/arithmetic.hpp"
#include "heartlab/bifurcations.hpp"
#include "heartlab/kernel.hpp"
#include "heartlab/model.hpp"

namespace heartlab::ord {

using bif::ConnectionEvent;
using bif::Mark;
using bif::MarkedSequence;

struct Word {
  std::string letters;  // over {E, I, X}
  int offset = 0;       // letters dropped from the front

  std::size_t size() const { return letters.size(); }
};

inline const std::set<Mark>& base_alphabet() {
  static const std::set<Mark> a{Mark::LE, Mark::LI};
  return a;
}

inline const std::set<Mark>& full_alphabet() {
  static const std::set<Mark> a{Mark::LE, Mark::LI, Mark::EI};
  return a;
}

inline Word word_of(const MarkedSequence& ms, const std::set<Mark>& alphabet) {
  Word w;
  for (const auto& e : ms.events) {
    if (alphabet.count(e.mark)) w.letters.push_back(bif::letter(e.mark));
  }
  return w;
}

inline Word drop_front(const Word& w, int d) {
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(d), w.size());
  return {w.letters.substr(n), w.offset + static_cast<int>(n)};
}

// ---------------------------------------------------------------------------

struct Mismatch {
  int d1 = 0;
  int d2 = 0;
  std::size_t index = 0;  // position after the drops
  char letter1 = '?';
  char letter2 = '?';
};

struct OrderVerdict {
  enum class Kind { Equivalent, Distinct, Inconclusive };
  Kind kind = Kind::Inconclusive;
  int d1 = 0;
  int d2 = 0;
  std::size_t overlap = 0;
  std::optional<Mismatch> witness;  // Distinct only

  bool equivalent() const { return kind == Kind::Equivalent; }
  bool distinct() const { return kind == Kind::Distinct; }
};

inline const char* to_string(OrderVerdict::Kind k) {
  switch (k) {
    case OrderVerdict::Kind::Equivalent: return "Equivalent";
    case OrderVerdict::Kind::Distinct: return "Distinct";
    case OrderVerdict::Kind::Inconclusive: return "Inconclusive";
  }
  return "?";
}

inline constexpr std::size_t kDefaultMinOverlap = 10;

/// Word-level order equivalence: some drops d1, d2 <= max_drop make the two
/// remainders agree over an overlap of at least min_overlap letters.
///
/// Among agreeing drops the smallest d1 + d2 wins, then the longer overlap,
/// then the smaller d1. Distinct reports the mismatch with the smallest index
/// among all drop pairs with enough overlap.
inline OrderVerdict order_equivalent(const Word& w1, const Word& w2, int max_drop,
                                     std::size_t min_overlap = kDefaultMinOverlap) {
  if (max_drop < 0) throw DomainError("order_equivalent: max_drop must be non-negative");
  OrderVerdict best;
  std::optional<Mismatch> first_mismatch;
  bool any_long = false;
  for (int d1 = 0; d1 <= max_drop; ++d1) {
    for (int d2 = 0; d2 <= max_drop; ++d2) {
      if (static_cast<std::size_t>(d1) > w1.size() || static_cast<std::size_t>(d2) > w2.size()) continue;
      const std::size_t len = std::min(w1.size() - d1, w2.size() - d2);
      if (len < min_overlap) continue;
      any_long = true;
      std::size_t j = 0;
      while (j < len && w1.letters[d1 + j] == w2.letters[d2 + j]) ++j;
      if (j == len) {
        const bool take = !best.equivalent() || d1 + d2 < best.d1 + best.d2 ||
                          (d1 + d2 == best.d1 + best.d2 &&
                           (len > best.overlap || (len == best.overlap && d1 < best.d1)));
        if (take) {
          best.kind = OrderVerdict::Kind::Equivalent;
          best.d1 = d1;
          best.d2 = d2;
          best.overlap = len;
        }
      } else if (!first_mismatch || j < first_mismatch->index) {
        first_mismatch = Mismatch{d1, d2, j, w1.letters[d1 + j], w2.letters[d2 + j]};
      }
    }
  }
  if (best.equivalent()) return best;
  if (any_long) {
    best.kind = OrderVerdict::Kind::Distinct;
    best.witness = first_mismatch;
    best.d1 = first_mismatch->d1;
    best.d2 = first_mismatch->d2;
  }
  return best;
}

/// Lattice signature (p, q) of a pair of drops: p counts E letters dropped
/// from w2 beyond those dropped from w1, q counts I letters dropped from w1
/// beyond those dropped from w2.
inline std::pair<long, long> drop_signature(const Word& w1, const Word& w2, int d1, int d2) {
  auto count = [](const Word& w, int d, char c) {
    return static_cast<long>(std::count(w.letters.begin(), w.letters.begin() + std::min<std::size_t>(d, w.size()), c));
  };
  return {count(w2, d2, 'E') - count(w1, d1, 'E'), count(w1, d1, 'I') - count(w2, d2, 'I')};
}

// ---------------------------------------------------------------------------
// Base homeomorphism.

struct BaseHomeo {
  std::vector<std::pair<Real, Real>> breakpoints;  // strictly increasing in both coordinates
  // matched event indices (into ms1.events, ms2.events), including EI events
  // that share a breakpoint with their anchor
  std::vector<std::pair<std::size_t, std::size_t>> matched;

  /// Piecewise affine, extended affinely beyond the end breakpoints.
  Real operator()(const Real& sigma) const {
    if (breakpoints.empty()) return sigma;
    if (breakpoints.size() == 1) return sigma - breakpoints[0].first + breakpoints[0].second;
    std::size_t j = 1;
    while (j + 1 < breakpoints.size() && sigma > breakpoints[j].first) ++j;
    const auto& [x0, y0] = breakpoints[j - 1];
    const auto& [x1, y1] = breakpoints[j];
    return y0 + (sigma - x0) * (y1 - y0) / (x1 - x0);
  }

  bool strictly_increasing() const {
    for (std::size_t j = 1; j < breakpoints.size(); ++j) {
      if (!(breakpoints[j - 1].first < breakpoints[j].first) ||
          !(breakpoints[j - 1].second < breakpoints[j].second)) {
        return false;
      }
    }
    return true;
  }
};

namespace detail {

/// Index of the first event retained after dropping d LE/LI events.
inline std::size_t retained_start(const MarkedSequence& ms, int d) {
  int seen = 0;
  for (std::size_t j = 0; j < ms.events.size(); ++j) {
    if (ms.events[j].mark == Mark::EI) continue;
    if (seen == d) return j;
    ++seen;
  }
  return ms.events.size();
}

}  // namespace detail

/// Pairs the retained events of ms1 and ms2 in order; drops count LE/LI events.
inline BaseHomeo build_base_homeo(const MarkedSequence& ms1, const MarkedSequence& ms2, int d1, int d2) {
  BaseHomeo h;
  std::size_t a = detail::retained_start(ms1, d1);
  std::size_t b = detail::retained_start(ms2, d2);
  for (; a < ms1.events.size() && b < ms2.events.size(); ++a, ++b) {
    const ConnectionEvent& e1 = ms1.events[a];
    const ConnectionEvent& e2 = ms2.events[b];
    if (e1.mark != e2.mark) {
      throw Error("build_base_homeo: mark mismatch at retained event " + std::to_string(h.matched.size()) + " (" +
                  bif::to_string(e1.mark) + " vs " + bif::to_string(e2.mark) + ")");
    }
    h.matched.emplace_back(a, b);
    if (e1.ln_offset || e2.ln_offset) continue;  // rounds onto the next breakpoint
    h.breakpoints.emplace_back(e1.sigma, e2.sigma);
  }
  if (!h.strictly_increasing()) throw Error("build_base_homeo: matched events are not increasing");
  return h;
}

// ---------------------------------------------------------------------------
// Family comparison experiments.

struct ExperimentOptions {
  int depth = 30;  // LE/LI events per family
  int max_drop = 3;
  std::size_t min_overlap = kDefaultMinOverlap;
  long p_bound = arith::kDefaultLatticeBound;
  long q_bound = arith::kDefaultLatticeBound;
  std::optional<Real> lattice_tol;  // default 1e-9 gamma
  double sigma_tol = kDefaultSigmaTolerance;
  bool with_ei = true;
};

/// Scans of both families, run concurrently.
inline std::pair<MarkedSequence, MarkedSequence> scan_pair(const model::FamilyParams& p1,
                                                           const model::FamilyParams& p2,
                                                           const ExperimentOptions& opt) {
  bif::ScanOptions so;
  so.depth = opt.depth;
  so.tol = opt.sigma_tol;
  so.with_ei = opt.with_ei;
  auto second = std::async(std::launch::async, [&] { return bif::scan(p2, so); });
  MarkedSequence first = bif::scan(p1, so);
  return {std::move(first), second.get()};
}

struct Lemma1Report {
  Real A1;
  Real A2;
  bool same_A = false;
  std::optional<arith::LatticeWitness> predicted;  // from tau_model
  long p_bound = 0;
  long q_bound = 0;
  Word w1;
  Word w2;
  OrderVerdict verdict;
  std::pair<long, long> observed{0, 0};  // drop signature when Equivalent

  /// The lemma's claim at this depth: a lattice witness forces equivalent
  /// words with drops matching (p, q).
  bool agrees() const {
    if (!same_A || !predicted) return true;
    return verdict.equivalent() && observed == std::pair(predicted->p, predicted->q);
  }
};

inline Lemma1Report lemma1_from_scans(const model::FamilyParams& p1, const model::FamilyParams& p2,
                                      const MarkedSequence& ms1, const MarkedSequence& ms2,
                                      const ExperimentOptions& opt) {
  const model::Derived a = model::derive(p1);
  const model::Derived b = model::derive(p2);
  Lemma1Report r;
  r.A1 = a.A;
  r.A2 = b.A;
  r.p_bound = opt.p_bound;
  r.q_bound = opt.q_bound;
  const Real tol = opt.lattice_tol ? *opt.lattice_tol : arith::default_lattice_tol(a.gamma);
  r.same_A = abs(a.A - b.A) <= tol;
  if (r.same_A) r.predicted = arith::equiv_mod_lattice(a.tau_model, b.tau_model, a.A, opt.p_bound, opt.q_bound, tol);
  r.w1 = word_of(ms1, base_alphabet());
  r.w2 = word_of(ms2, base_alphabet());
  r.verdict = order_equivalent(r.w1, r.w2, opt.max_drop, opt.min_overlap);
  if (r.verdict.equivalent()) r.observed = drop_signature(r.w1, r.w2, r.verdict.d1, r.verdict.d2);
  return r;
}

inline Lemma1Report lemma1_experiment(const model::FamilyParams& p1, const model::FamilyParams& p2,
                                      const ExperimentOptions& opt = {}) {
  ExperimentOptions base = opt;
  base.with_ei = false;
  const auto [ms1, ms2] = scan_pair(p1, p2, base);
  return lemma1_from_scans(p1, p2, ms1, ms2, opt);
}

struct OneXViolation {
  int sequence = 0;        // 1 or 2
  std::size_t interval = 0;  // index of the gap interval (between base letters interval, interval+1)
  int x_count = 0;
};

struct Lemma3Report {
  std::vector<OneXViolation> one_x_violations;
  Word full1;
  Word full2;
  int full_d1 = 0;
  int full_d2 = 0;
  OrderVerdict verdict;  // on the full alphabet with the drops fixed by the base words

  bool holds() const { return one_x_violations.empty() && verdict.equivalent(); }
};

/// Gap intervals of a full word whose X count differs from one.
inline std::vector<OneXViolation> one_x_rule(const Word& full, int sequence) {
  std::vector<OneXViolation> out;
  std::size_t interval = 0;
  int xs = 0;
  bool started = false;
  for (char c : full.letters) {
    if (c == 'X') {
      ++xs;
      continue;
    }
    if (started && xs != 1) out.push_back({sequence, interval, xs});
    if (started) ++interval;
    started = true;
    xs = 0;
  }
  return out;
}

/// Full-alphabet words compared with the base drops d1, d2 carried over: the
/// retained part starts at the first retained E/I letter on both sides.
inline Lemma3Report lemma3_extension(const MarkedSequence& ms1, const MarkedSequence& ms2, int d1, int d2,
                                     std::size_t min_overlap = kDefaultMinOverlap) {
  Lemma3Report r;
  r.full1 = word_of(ms1, full_alphabet());
  r.full2 = word_of(ms2, full_alphabet());
  for (const auto& v : one_x_rule(r.full1, 1)) r.one_x_violations.push_back(v);
  for (const auto& v : one_x_rule(r.full2, 2)) r.one_x_violations.push_back(v);
  r.full_d1 = static_cast<int>(detail::retained_start(ms1, d1));
  r.full_d2 = static_cast<int>(detail::retained_start(ms2, d2));
  const Word a = drop_front(r.full1, r.full_d1);
  const Word b = drop_front(r.full2, r.full_d2);
  r.verdict = order_equivalent(a, b, 0, min_overlap);
  r.verdict.d1 = r.full_d1;
  r.verdict.d2 = r.full_d2;
  if (r.verdict.witness) {
    r.verdict.witness->d1 = r.full_d1;
    r.verdict.witness->d2 = r.full_d2;
  }
  return r;
}

}  // namespace heartlab::ord
