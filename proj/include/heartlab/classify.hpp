#pragma once

// Pairwise classification of two standard families: invariants first, then
// the event orders of both families, then the regime-by-regime graph
// certificates.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "heartlab/arithmetic.hpp"
#include "heartlab/lmf.hpp"
#include "heartlab/model.hpp"
#include "heartlab/orderings.hpp"

namespace heartlab::classify {

inline constexpr int kSchemaVersion = 1;

struct ClassifyOptions {
  ord::ExperimentOptions experiment;
  long n_max = 200;  // Diophantine scan range
};

struct Certificate {
  lmf::Regime regime = lmf::Regime::PosEpsGeneric;
  lmf::Isomorphism isotopy;
};

struct ClassificationVerdict {
  enum class Kind { WeaklyEquivalent, Distinct };
  Kind kind = Kind::Distinct;
  std::string reason;  // empty, "A mismatch", "no lattice witness", "word mismatch", "one-X rule"

  model::Derived inv1;
  model::Derived inv2;
  Real lattice_tol;
  long p_bound = 0;
  long q_bound = 0;
  std::optional<arith::LatticeWitness> witness;

  arith::DiophantineReport dioph1;
  arith::DiophantineReport dioph2;
  bool not_diophantine_evidence = false;

  std::optional<ord::Lemma1Report> lemma1;
  std::optional<ord::Lemma3Report> lemma3;
  std::optional<ord::BaseHomeo> h;
  std::vector<Certificate> certificates;
  bool drops_match_prediction = false;

  bool weakly_equivalent() const { return kind == Kind::WeaklyEquivalent; }
};

inline const char* to_string(ClassificationVerdict::Kind k) {
  return k == ClassificationVerdict::Kind::WeaklyEquivalent ? "WeaklyEquivalent" : "Distinct";
}

inline ClassificationVerdict classify_pair(const model::FamilyParams& p1, const model::FamilyParams& p2,
                                           const ClassifyOptions& opt = {}) {
  ClassificationVerdict v;
  v.inv1 = model::derive(p1);
  v.inv2 = model::derive(p2);
  const auto& ex = opt.experiment;
  v.p_bound = ex.p_bound;
  v.q_bound = ex.q_bound;
  v.lattice_tol = ex.lattice_tol ? *ex.lattice_tol : arith::default_lattice_tol(v.inv1.gamma);

  v.dioph1 = arith::diophantine_check(v.inv1.A, v.inv1.gamma, v.inv1.s_model, opt.n_max);
  v.dioph2 = arith::diophantine_check(v.inv2.A, v.inv2.gamma, v.inv2.s_model, opt.n_max);
  v.not_diophantine_evidence = v.dioph1.verdict == arith::DiophantineReport::Verdict::ViolationsFound ||
                               v.dioph2.verdict == arith::DiophantineReport::Verdict::ViolationsFound;

  if (abs(v.inv1.A - v.inv2.A) > v.lattice_tol) {
    v.reason = "A mismatch";
    return v;
  }
  v.witness = arith::equiv_mod_lattice(v.inv1.tau_model, v.inv2.tau_model, v.inv1.A, ex.p_bound, ex.q_bound,
                                       v.lattice_tol);
  if (!v.witness) {
    v.reason = "no lattice witness";
    return v;
  }

  ord::ExperimentOptions scan_opt = ex;
  scan_opt.with_ei = true;
  const auto [ms1, ms2] = ord::scan_pair(p1, p2, scan_opt);
  v.lemma1 = ord::lemma1_from_scans(p1, p2, ms1, ms2, ex);
  if (!v.lemma1->verdict.equivalent()) {
    v.reason = "word mismatch";
    return v;
  }
  v.drops_match_prediction = v.lemma1->agrees();
  v.lemma3 = ord::lemma3_extension(ms1, ms2, v.lemma1->verdict.d1, v.lemma1->verdict.d2, ex.min_overlap);
  if (!v.lemma3->holds()) {
    v.reason = v.lemma3->one_x_violations.empty() ? "word mismatch" : "one-X rule";
    return v;
  }
  v.h = ord::build_base_homeo(ms1, ms2, v.lemma1->verdict.d1, v.lemma1->verdict.d2);
  for (lmf::Regime r : lmf::all_regimes()) {
    const lmf::LmfGraph g = lmf::make_template(r);
    auto iso = lmf::isotopic(g, g);
    if (!iso) {
      v.reason = std::string("no isotopy for regime ") + lmf::to_string(r);
      return v;
    }
    v.certificates.push_back({r, std::move(*iso)});
  }
  v.kind = ClassificationVerdict::Kind::WeaklyEquivalent;
  return v;
}

// ---------------------------------------------------------------------------
// JSON.

inline constexpr int kJsonDigits = 30;

inline std::string dec(const Real& x, int digits = kJsonDigits) { return x.to_string(digits); }

inline nlohmann::json to_json(const model::Derived& d) {
  nlohmann::json j;
  j["nu"] = dec(d.nu);
  j["gamma"] = dec(d.gamma);
  j["A"] = dec(d.A);
  j["s_model"] = dec(d.s_model);
  j["tau_model"] = dec(d.tau_model);
  j["s_paper"] = d.s_paper ? nlohmann::json(dec(*d.s_paper)) : nlohmann::json(nullptr);
  j["tau_paper"] = d.tau_paper ? nlohmann::json(dec(*d.tau_paper)) : nlohmann::json(nullptr);
  j["c_E"] = dec(d.c_E);
  j["c_I"] = dec(d.c_I);
  return j;
}

inline nlohmann::json to_json(const arith::DiophantineReport& r) {
  nlohmann::json j;
  j["n_max"] = r.n_max;
  j["verdict"] = r.verdict == arith::DiophantineReport::Verdict::NoViolationsBeyond ? "NoViolationsBeyond"
                                                                                     : "ViolationsFound";
  j["index"] = r.index;
  nlohmann::json vs = nlohmann::json::array();
  for (const auto& v : r.violations) vs.push_back({{"m", v.m}, {"n", v.n}, {"offset", dec(v.offset, 20)}});
  j["violations"] = vs;
  return j;
}

inline nlohmann::json to_json(const ord::OrderVerdict& o) {
  nlohmann::json j;
  j["kind"] = ord::to_string(o.kind);
  j["d1"] = o.d1;
  j["d2"] = o.d2;
  j["overlap"] = o.overlap;
  if (o.witness) {
    j["mismatch"] = {{"d1", o.witness->d1},
                     {"d2", o.witness->d2},
                     {"index", o.witness->index},
                     {"letter1", std::string(1, o.witness->letter1)},
                     {"letter2", std::string(1, o.witness->letter2)}};
  }
  return j;
}

inline nlohmann::json to_json(const ClassificationVerdict& v) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["verdict"] = to_string(v.kind);
  j["reason"] = v.reason;
  j["invariants"] = {to_json(v.inv1), to_json(v.inv2)};
  j["lattice"] = {{"p_bound", v.p_bound}, {"q_bound", v.q_bound}, {"tol", dec(v.lattice_tol, 10)}};
  if (v.witness) {
    j["lattice"]["witness"] = {{"p", v.witness->p}, {"q", v.witness->q}, {"residual", dec(v.witness->residual, 10)}};
  } else {
    j["lattice"]["witness"] = nullptr;
  }
  j["diophantine"] = {to_json(v.dioph1), to_json(v.dioph2)};
  j["not_diophantine_evidence"] = v.not_diophantine_evidence;
  if (v.lemma1) {
    j["words"] = {v.lemma1->w1.letters, v.lemma1->w2.letters};
    j["order"] = to_json(v.lemma1->verdict);
    j["drops"] = {v.lemma1->observed.first, v.lemma1->observed.second};
    j["drops_match_prediction"] = v.drops_match_prediction;
  }
  if (v.lemma3) {
    j["full_words"] = {v.lemma3->full1.letters, v.lemma3->full2.letters};
    j["full_order"] = to_json(v.lemma3->verdict);
    j["one_x_violations"] = v.lemma3->one_x_violations.size();
  }
  if (v.h) {
    nlohmann::json bp = nlohmann::json::array();
    for (const auto& [a, b] : v.h->breakpoints) bp.push_back({dec(a, 25), dec(b, 25)});
    j["base_homeomorphism"] = {{"breakpoints", bp}, {"matched_events", v.h->matched.size()}};
  }
  nlohmann::json certs = nlohmann::json::array();
  for (const auto& c : v.certificates) {
    certs.push_back({{"regime", lmf::to_string(c.regime)}, {"vertex_map", c.isotopy.vertex_map},
                     {"edge_map", c.isotopy.edge_map}});
  }
  j["certificates"] = certs;
  return j;
}

}  // namespace heartlab::classify
