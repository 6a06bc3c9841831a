#pragma once

// Command-line front end. Every subcommand writes one JSON object (or a TSV
// table) to `out` and diagnostics to `err`, and returns the process exit code.

#include <cmath>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "heartlab/acceptance.hpp"
#include "heartlab/arithmetic.hpp"
#include "heartlab/bifurcations.hpp"
#include "heartlab/classify.hpp"
#include "heartlab/config.hpp"
#include "heartlab/errors.hpp"
#include "heartlab/lmf.hpp"
#include "heartlab/model.hpp"
#include "heartlab/orderings.hpp"

namespace heartlab::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kResonance = 3, kCheckFailed = 4 };

/// Significant decimal digits printed for a working precision.
inline int digits_for(Precision P) { return std::max(17, static_cast<int>(std::floor(P * 0.30102999566398)) - 3); }

namespace detail {

using nlohmann::json;

struct Globals {
  std::string config_path;
  std::optional<std::string> precision;
  std::optional<std::string> format;
};

/// Settings after merging defaults, the [run] section and flags.
class Settings {
 public:
  Settings(const config::ConfigFile& cfg, const Globals& g) : cfg_(cfg), globals_(g) {}

  std::string format() const {
    std::string f = globals_.format ? *globals_.format : run_value("format").value_or("json");
    if (f != "json" && f != "tsv") throw ConfigError("format must be json or tsv, got '" + f + "'");
    return f;
  }

  long integer(const std::string& key, const std::optional<long>& flag, long fallback) const {
    if (flag) return *flag;
    const auto v = run_value(key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      const long x = std::stol(*v, &used);
      if (used != v->size()) throw std::invalid_argument(key);
      return x;
    } catch (const std::logic_error&) {
      throw ConfigError("[run] " + key + ": expected an integer, got '" + *v + "'");
    }
  }

  double real(const std::string& key, const std::optional<double>& flag, double fallback) const {
    if (flag) return *flag;
    const auto v = run_value(key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      const double x = std::stod(*v, &used);
      if (used != v->size()) throw std::invalid_argument(key);
      return x;
    } catch (const std::logic_error&) {
      throw ConfigError("[run] " + key + ": expected a number, got '" + *v + "'");
    }
  }

  std::optional<std::string> text(const std::string& key) const { return run_value(key); }

  /// Bits for this run. "auto" sizes the precision from the depth and the
  /// largest contraction rate among the families involved.
  Precision precision(const std::vector<config::FamilySpec>& families, long depth) const {
    const std::string request = config::precision_request(cfg_.run.precision, globals_.precision);
    if (auto bits = config::parse_precision(request, "precision")) return *bits;
    Precision P = kDefaultPrecision;
    for (const auto& f : families) {
      const auto d = model::derive(f.resolve(kDefaultPrecision));
      P = std::max(P, required_precision(std::max(depth, 1L), d.gamma));
    }
    return P;
  }

  /// A family from a builtin name, a file, or the single family of --config.
  config::FamilySpec family(const std::string& arg) const {
    if (!arg.empty()) {
      const auto it = cfg_.families.find(arg);
      if (it != cfg_.families.end()) return it->second;
      return config::family_from_argument(arg);
    }
    if (cfg_.families.size() == 1) return cfg_.families.begin()->second;
    throw ConfigError("no family given (use --family or a config with exactly one family)");
  }

 private:
  std::optional<std::string> run_value(const std::string& key) const {
    const auto it = cfg_.run.values.find(key);
    if (it == cfg_.run.values.end()) return std::nullopt;
    return it->second;
  }

  const config::ConfigFile& cfg_;
  const Globals& globals_;
};

inline json header(const std::string& command, Precision P) {
  json j;
  j["schema_version"] = classify::kSchemaVersion;
  j["command"] = command;
  j["precision_bits"] = P;
  return j;
}

inline json family_json(const config::FamilySpec& f, const model::FamilyParams& p, int digits) {
  return {{"name", f.name},         {"lambda", p.lambda.to_string(digits)}, {"mu", p.mu.to_string(digits)},
          {"lnB1", p.ln_B1.to_string(digits)}, {"lnB2", p.ln_B2.to_string(digits)},
          {"lnC1", p.ln_C1.to_string(digits)}, {"lnC2", p.ln_C2.to_string(digits)}};
}

inline std::string opt_text(const std::optional<Real>& x, int digits) { return x ? x->to_string(digits) : "null"; }

inline json event_json(const bif::ConnectionEvent& e, int digits) {
  json j{{"sigma", e.sigma.to_string(digits)}, {"mark", bif::to_string(e.mark)}};
  j["n"] = e.n ? json(*e.n) : json(nullptr);
  j["k"] = e.k ? json(*e.k) : json(nullptr);
  j["ln_gap"] = e.ln_offset ? json(e.ln_offset->to_string(20)) : json(nullptr);
  return j;
}

inline void tsv_tag(std::ostream& out, Precision P, int digits) {
  out << "# precision_bits=" << P << " digits=" << digits << "\n";
}

inline void emit(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

}  // namespace detail

/// Runs one command line; returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using detail::json;
  CLI::App app{"heartlab: bifurcations of the tears-of-the-heart polycycle"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  detail::Globals g;
  app.add_option("--config", g.config_path, "Configuration file")->check(CLI::ExistingFile);
  app.add_option("--precision", g.precision, "Working bits or 'auto'");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "tsv"}));

  std::string family, family_a, family_b;
  std::optional<long> depth, p_bound, q_bound, n_max, max_drop, min_overlap, seed;
  std::optional<double> sigma_tol, lattice_tol;
  std::optional<long> only_n, only_k;
  std::optional<double> sigma_max;
  bool no_ei = false;
  std::string emit = "events";

  auto* c_inv = app.add_subcommand("invariants", "Derived invariants of one family");
  c_inv->add_option("--family", family, "Builtin name (P0, P1, Pq, P2, Pmu) or family file");

  auto* c_scan = app.add_subcommand("scan", "Marked sequence of connection events");
  c_scan->add_option("--family", family, "Builtin name or family file");
  c_scan->add_option("--depth", depth, "Number of LE/LI events")->check(CLI::PositiveNumber);
  c_scan->add_option("--sigma-max", sigma_max, "Scan horizon in sigma");
  c_scan->add_option("--sigma-tol", sigma_tol, "Root tolerance in sigma")->check(CLI::PositiveNumber);
  c_scan->add_flag("--no-ei", no_ei, "Skip EI events");
  c_scan->add_option("--emit", emit, "events, residuals or ribbon")
      ->check(CLI::IsMember({"events", "residuals", "ribbon"}));

  auto* c_ei = app.add_subcommand("ei-locate", "EI connection in each gap interval");
  c_ei->add_option("--family", family, "Builtin name or family file");
  c_ei->add_option("--depth", depth, "Number of LE/LI events bounding the intervals")->check(CLI::PositiveNumber);
  c_ei->add_option("--n", only_n, "Only the interval with this E count");
  c_ei->add_option("--k", only_k, "Only the interval with this I count");
  c_ei->add_option("--sigma-tol", sigma_tol, "Root tolerance in sigma")->check(CLI::PositiveNumber);

  auto* c_cmp = app.add_subcommand("compare", "Classify a pair of families");
  c_cmp->add_option("--family-a", family_a, "First family")->required();
  c_cmp->add_option("--family-b", family_b, "Second family")->required();
  c_cmp->add_option("--depth", depth, "LE/LI events per family")->check(CLI::PositiveNumber);
  c_cmp->add_option("--p-bound", p_bound, "Lattice bound on p")->check(CLI::PositiveNumber);
  c_cmp->add_option("--q-bound", q_bound, "Lattice bound on q")->check(CLI::PositiveNumber);
  c_cmp->add_option("--lattice-tol", lattice_tol, "Lattice residual tolerance")->check(CLI::PositiveNumber);
  c_cmp->add_option("--max-drop", max_drop, "Largest prefix drop tried")->check(CLI::NonNegativeNumber);
  c_cmp->add_option("--min-overlap", min_overlap, "Shortest overlap accepted")->check(CLI::PositiveNumber);
  c_cmp->add_option("--n-max", n_max, "Diophantine scan range")->check(CLI::PositiveNumber);
  c_cmp->add_option("--sigma-tol", sigma_tol, "Root tolerance in sigma")->check(CLI::PositiveNumber);

  std::string A_text, gamma_text, s_text;
  auto* c_dio = app.add_subcommand("diophantine-check", "Inclusions |gamma(nA - m) - s| <= 1/(m^2 + n^2)");
  c_dio->add_option("--family", family, "Builtin name or family file");
  c_dio->add_option("--A", A_text, "A given directly (decimal)");
  c_dio->add_option("--gamma", gamma_text, "gamma given directly (decimal)");
  c_dio->add_option("--s", s_text, "s given directly (decimal)");
  c_dio->add_option("--n-max", n_max, "Largest |n|")->check(CLI::PositiveNumber);

  double m_gamma = 1.0, m_s = 0.0, m_T = 1.0;
  std::vector<long> m_N{10, 20, 40};
  long m_samples = 200000;
  auto* c_meas = app.add_subcommand("measure-experiment", "Measure of the exceptional s-set beyond N");
  c_meas->add_option("--gamma", m_gamma, "gamma")->capture_default_str();
  c_meas->add_option("--s", m_s, "Centre s")->capture_default_str();
  c_meas->add_option("--T", m_T, "Half-width of the s-window")->capture_default_str()->check(CLI::PositiveNumber);
  c_meas->add_option("--N", m_N, "Cut-offs")->capture_default_str();
  c_meas->add_option("--samples", m_samples, "Monte-Carlo samples")->capture_default_str()->check(CLI::PositiveNumber);
  c_meas->add_option("--seed", seed, "Random seed");

  std::string regime = "PosEpsGeneric", surgery_mark, validate_path;
  std::vector<std::string> iso_paths;
  bool mirror = false;
  auto* c_lmf = app.add_subcommand("lmf", "LMF graph templates and checks");
  c_lmf->add_option("--regime", regime, "NegEps, PosEpsGeneric, PosEpsLE, PosEpsLI, PosEpsEI")->capture_default_str();
  c_lmf->add_flag("--mirror", mirror, "Mirror image of the graph");
  c_lmf->add_option("--surgery", surgery_mark, "Apply the surgery for LE, LI or EI")
      ->check(CLI::IsMember({"LE", "LI", "EI"}));
  c_lmf->add_option("--validate", validate_path, "Validate a graph file")->check(CLI::ExistingFile);
  c_lmf->add_option("--isotopic", iso_paths, "Two graph files to compare")->expected(2)->check(CLI::ExistingFile);

  auto* c_self = app.add_subcommand("selftest", "Run the acceptance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    config::ConfigFile cfg;
    if (!g.config_path.empty()) cfg = config::load_config(g.config_path);
    const detail::Settings st(cfg, g);
    const std::string fmt = st.format();

    if (c_inv->parsed()) {
      const auto spec = st.family(family);
      const Precision P = st.precision({spec}, 1);
      const int D = digits_for(P);
      const auto p = spec.resolve(P);
      const auto d = model::derive(p);
      const auto guard = arith::rationality_guard(d.A);
      if (fmt == "tsv") {
        detail::tsv_tag(out, P, D);
        out << "key\tvalue\n";
        out << "lambda\t" << p.lambda.to_string(D) << "\nmu\t" << p.mu.to_string(D) << "\nnu\t" << d.nu.to_string(D)
            << "\ngamma\t" << d.gamma.to_string(D) << "\nbeta\t" << d.beta.to_string(D) << "\nA\t" << d.A.to_string(D)
            << "\ns_paper\t" << detail::opt_text(d.s_paper, D) << "\ns_model\t" << d.s_model.to_string(D)
            << "\ntau_paper\t" << detail::opt_text(d.tau_paper, D) << "\ntau_model\t" << d.tau_model.to_string(D)
            << "\n";
      } else {
        json j = detail::header("invariants", P);
        j["family"] = detail::family_json(spec, p, D);
        j["lambda"] = p.lambda.to_string(D);
        j["mu"] = p.mu.to_string(D);
        j["nu"] = d.nu.to_string(D);
        j["gamma"] = d.gamma.to_string(D);
        j["beta"] = d.beta.to_string(D);
        j["A"] = d.A.to_string(D);
        j["s_paper"] = d.s_paper ? json(d.s_paper->to_string(D)) : json(nullptr);
        j["s_model"] = d.s_model.to_string(D);
        j["tau_paper"] = d.tau_paper ? json(d.tau_paper->to_string(D)) : json(nullptr);
        j["tau_model"] = d.tau_model.to_string(D);
        json cf = json::array();
        for (const auto& c : arith::continued_fraction(d.A, 12)) cf.push_back({c.p, c.q});
        j["A_convergents"] = cf;
        j["A_rational_candidate"] = guard ? json({guard->p, guard->q}) : json(nullptr);
        detail::emit(out, j);
      }
      return kOk;
    }

    if (c_scan->parsed()) {
      const auto spec = st.family(family);
      const long D0 = st.integer("depth", depth, 30);
      const Precision P = st.precision({spec}, D0);
      const int D = digits_for(P);
      const auto p = spec.resolve(P);
      bif::ScanOptions o;
      if (sigma_max) {
        o.sigma_max = Real(*sigma_max, P);
        if (depth) o.depth = static_cast<int>(*depth);
      } else {
        o.depth = static_cast<int>(D0);
      }
      o.tol = st.real("sigma_tol", sigma_tol, kDefaultSigmaTolerance);
      o.with_ei = !no_ei;
      const auto ms = bif::scan(p, o);

      if (emit == "residuals") {
        std::vector<std::pair<bif::Mark, bif::ProgressionFit>> fits;
        for (auto m : {bif::Mark::LE, bif::Mark::LI}) {
          const auto ev = ms.of_mark(m);
          if (ev.size() >= 4) fits.emplace_back(m, bif::progression_fit(ev));
        }
        if (fmt == "tsv") {
          detail::tsv_tag(out, P, D);
          out << "mark\tindex\tresidual\n";
          for (const auto& [m, f] : fits) {
            for (std::size_t j = 0; j < f.residuals.size(); ++j) {
              out << bif::to_string(m) << "\t" << f.first_index + static_cast<int>(j) << "\t"
                  << f.residuals[j].to_string(20) << "\n";
            }
          }
        } else {
          json j = detail::header("scan", P);
          j["family"] = spec.name;
          json arr = json::array();
          for (const auto& [m, f] : fits) {
            json r = json::array();
            for (const auto& x : f.residuals) r.push_back(x.to_string(20));
            arr.push_back({{"mark", bif::to_string(m)},
                           {"first_index", f.first_index},
                           {"common_difference", f.common_difference.to_string(D)},
                           {"intercept", f.intercept.to_string(D)},
                           {"residuals", r}});
          }
          j["fits"] = arr;
          detail::emit(out, j);
        }
        return kOk;
      }
      if (emit == "ribbon") {
        const auto w = ord::word_of(ms, no_ei ? ord::base_alphabet() : ord::full_alphabet());
        if (fmt == "tsv") {
          detail::tsv_tag(out, P, D);
          out << "family\tword\n" << spec.name << "\t" << w.letters << "\n";
        } else {
          json j = detail::header("scan", P);
          j["family"] = spec.name;
          j["word"] = w.letters;
          detail::emit(out, j);
        }
        return kOk;
      }
      if (fmt == "tsv") {
        detail::tsv_tag(out, P, D);
        out << "sigma\tmark\tn\tk\tln_gap\n";
        for (const auto& e : ms.events) {
          out << e.sigma.to_string(D) << "\t" << bif::to_string(e.mark) << "\t" << (e.n ? std::to_string(*e.n) : "")
              << "\t" << (e.k ? std::to_string(*e.k) : "") << "\t" << (e.ln_offset ? e.ln_offset->to_string(20) : "")
              << "\n";
        }
      } else {
        json j = detail::header("scan", P);
        j["family"] = spec.name;
        json ev = json::array();
        for (const auto& e : ms.events) ev.push_back(detail::event_json(e, D));
        j["events"] = ev;
        j["strictly_increasing"] = ms.strictly_increasing();
        detail::emit(out, j);
      }
      return ms.strictly_increasing() ? kOk : kCheckFailed;
    }

    if (c_ei->parsed()) {
      const auto spec = st.family(family);
      const long D0 = st.integer("depth", depth, 30);
      const Precision P = st.precision({spec}, D0);
      const int D = digits_for(P);
      const auto p = spec.resolve(P);
      const double tol = st.real("sigma_tol", sigma_tol, kDefaultSigmaTolerance);
      bif::ScanOptions o;
      o.depth = static_cast<int>(D0);
      o.tol = tol;
      o.with_ei = false;
      const auto base = bif::scan(p, o).events;
      std::vector<bif::ConnectionEvent> found;
      for (std::size_t j = 0; j + 1 < base.size(); ++j) {
        const auto [n, k] = bif::interval_counts(base, j);
        if ((only_n && *only_n != n) || (only_k && *only_k != k)) continue;
        found.push_back(bif::locate_EI(base[j].sigma, base[j + 1].sigma, n, k, p, tol));
      }
      if (fmt == "tsv") {
        detail::tsv_tag(out, P, D);
        out << "sigma\tmark\tn\tk\tln_gap\n";
        for (const auto& e : found) {
          out << e.sigma.to_string(D) << "\tEI\t" << *e.n << "\t" << *e.k << "\t"
              << (e.ln_offset ? e.ln_offset->to_string(20) : "") << "\n";
        }
      } else {
        json j = detail::header("ei-locate", P);
        j["family"] = spec.name;
        json ev = json::array();
        for (const auto& e : found) ev.push_back(detail::event_json(e, D));
        j["events"] = ev;
        detail::emit(out, j);
      }
      return kOk;
    }

    if (c_cmp->parsed()) {
      const auto a = st.family(family_a);
      const auto b = st.family(family_b);
      classify::ClassifyOptions co;
      co.experiment.depth = static_cast<int>(st.integer("depth", depth, 30));
      co.experiment.p_bound = st.integer("p_bound", p_bound, arith::kDefaultLatticeBound);
      co.experiment.q_bound = st.integer("q_bound", q_bound, arith::kDefaultLatticeBound);
      co.experiment.max_drop = static_cast<int>(st.integer("max_drop", max_drop, co.experiment.max_drop));
      co.experiment.min_overlap =
          static_cast<std::size_t>(st.integer("min_overlap", min_overlap, static_cast<long>(ord::kDefaultMinOverlap)));
      co.experiment.sigma_tol = st.real("sigma_tol", sigma_tol, kDefaultSigmaTolerance);
      co.n_max = st.integer("n_max", n_max, co.n_max);
      const Precision P = st.precision({a, b}, co.experiment.depth);
      if (lattice_tol || st.text("lattice_tol")) co.experiment.lattice_tol = Real(st.real("lattice_tol", lattice_tol, 0), P);
      const auto v = classify::classify_pair(a.resolve(P), b.resolve(P), co);
      if (fmt == "tsv") {
        detail::tsv_tag(out, P, digits_for(P));
        out << "key\tvalue\n";
        out << "verdict\t" << classify::to_string(v.kind) << "\n";
        out << "reason\t" << v.reason << "\n";
        if (v.witness) out << "lattice_witness\t" << v.witness->p << "," << v.witness->q << "\n";
        if (v.lemma1) {
          out << "drops\t" << v.lemma1->observed.first << "," << v.lemma1->observed.second << "\n";
          out << "word_a\t" << v.lemma1->w1.letters << "\nword_b\t" << v.lemma1->w2.letters << "\n";
        }
        out << "certificates\t" << v.certificates.size() << "\n";
      } else {
        json j = classify::to_json(v);
        j["command"] = "compare";
        j["precision_bits"] = P;
        j["families"] = {a.name, b.name};
        detail::emit(out, j);
      }
      return kOk;
    }

    if (c_dio->parsed()) {
      const long N = st.integer("n_max", n_max, 200);
      Precision P = kDefaultPrecision;
      Real A, gamma, s;
      std::string label;
      if (!A_text.empty() || !gamma_text.empty() || !s_text.empty()) {
        if (A_text.empty() || gamma_text.empty() || s_text.empty()) {
          throw ConfigError("diophantine-check: --A, --gamma and --s go together");
        }
        P = st.precision({}, 1);
        A = Real::parse(A_text, P);
        gamma = Real::parse(gamma_text, P);
        s = Real::parse(s_text, P);
        label = "direct";
      } else {
        const auto spec = st.family(family);
        P = st.precision({spec}, 1);
        const auto d = model::derive(spec.resolve(P));
        A = d.A;
        gamma = d.gamma;
        s = d.s_model;
        label = spec.name;
      }
      const auto r = arith::diophantine_check(A, gamma, s, N);
      if (fmt == "tsv") {
        detail::tsv_tag(out, P, digits_for(P));
        out << "m\tn\toffset\n";
        for (const auto& v : r.violations) out << v.m << "\t" << v.n << "\t" << v.offset.to_string(20) << "\n";
      } else {
        json j = detail::header("diophantine-check", P);
        j["source"] = label;
        j["A"] = A.to_string(digits_for(P));
        j["gamma"] = gamma.to_string(digits_for(P));
        j["s"] = s.to_string(digits_for(P));
        j["report"] = classify::to_json(r);
        detail::emit(out, j);
      }
      return kOk;
    }

    if (c_meas->parsed()) {
      const auto sd = static_cast<std::uint64_t>(st.integer("seed", seed, 20240917));
      std::vector<arith::MeasureReport> reps;
      for (long N : m_N) {
        if (N < 1) throw DomainError("measure-experiment: N must be >= 1");
        reps.push_back(arith::measure_experiment(m_gamma, m_s, m_T, N, static_cast<std::size_t>(m_samples), sd));
      }
      bool ok = true;
      for (const auto& r : reps) ok = ok && r.within_bound();
      if (fmt == "tsv") {
        out << "N\tunion_measure\tbound\thit_fraction\texpected_fraction\tbinomial_sigma\n";
        out.precision(12);
        for (const auto& r : reps) {
          out << r.N << "\t" << r.union_measure << "\t" << r.bound << "\t" << r.hit_fraction << "\t"
              << r.expected_fraction << "\t" << r.binomial_sigma << "\n";
        }
      } else {
        json j = detail::header("measure-experiment", 53);
        j["gamma"] = m_gamma;
        j["s"] = m_s;
        j["T"] = m_T;
        j["seed"] = sd;
        json arr = json::array();
        for (const auto& r : reps) {
          arr.push_back({{"N", r.N},
                         {"N_cap", r.N_cap},
                         {"intervals", r.interval_count},
                         {"union_measure", r.union_measure},
                         {"bound", r.bound},
                         {"within_bound", r.within_bound()},
                         {"samples", r.samples},
                         {"hit_fraction", r.hit_fraction},
                         {"expected_fraction", r.expected_fraction},
                         {"binomial_sigma", r.binomial_sigma},
                         {"within_3_sigma", r.within_3_sigma()}});
        }
        j["runs"] = arr;
        detail::emit(out, j);
      }
      if (!ok) err << "measure-experiment: union measure above the bound\n";
      return ok ? kOk : kCheckFailed;
    }

    if (c_lmf->parsed()) {
      auto read_graph = [](const std::string& path) {
        std::ifstream in(path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return lmf::parse_graph(ss.str());
      };
      if (!iso_paths.empty()) {
        const auto g1 = read_graph(iso_paths[0]);
        const auto g2 = read_graph(iso_paths[1]);
        const auto iso = lmf::isotopic(g1, g2);
        json j = detail::header("lmf", 0);
        j["isotopic"] = iso.has_value();
        if (iso) j["vertex_map"] = iso->vertex_map;
        if (fmt == "tsv") {
          out << "isotopic\t" << (iso ? "true" : "false") << "\n";
        } else {
          detail::emit(out, j);
        }
        return kOk;
      }
      lmf::LmfGraph graph = validate_path.empty() ? lmf::make_template(lmf::parse_regime(regime))
                                                  : read_graph(validate_path);
      if (!surgery_mark.empty()) {
        const bif::Mark m = surgery_mark == "LE" ? bif::Mark::LE : surgery_mark == "LI" ? bif::Mark::LI : bif::Mark::EI;
        graph = lmf::surgery(graph, m);
      }
      if (mirror) graph = lmf::mirror(graph);
      const auto problems = lmf::validate(graph);
      if (fmt == "tsv") {
        out << lmf::serialize(graph);
      } else {
        json j = detail::header("lmf", 0);
        j["source"] = validate_path.empty() ? regime : validate_path;
        j["valid"] = problems.empty();
        j["problems"] = problems;
        j["graph"] = lmf::serialize(graph);
        detail::emit(out, j);
      }
      for (const auto& pr : problems) err << "lmf: " << pr << "\n";
      return problems.empty() ? kOk : kCheckFailed;
    }

    if (c_self->parsed()) {
      std::vector<acceptance::CriterionResult> results;
      std::ostringstream lines;
      const bool all = acceptance::run_all(fmt == "json" ? lines : out, &results);
      if (fmt == "json") {
        json j = detail::header("selftest", kDefaultPrecision);
        json arr = json::array();
        for (const auto& r : results) {
          arr.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail}});
        }
        j["criteria"] = arr;
        j["all_pass"] = all;
        detail::emit(out, j);
      }
      return all ? kOk : kCheckFailed;
    }
  } catch (const ResonanceError& e) {
    err << "resonance: " << e.what() << "\n";
    return kResonance;
  } catch (const BracketError& e) {
    err << "check failed: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace heartlab::cli
