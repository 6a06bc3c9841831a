#pragma once

// Run configuration: named families given as decimal strings, a TOML-style
// key = value reader and the precision override chain
// (config file < HEARTLAB_PRECISION < command-line flag).

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "heartlab/errors.hpp"
#include "heartlab/kernel.hpp"
#include "heartlab/model.hpp"

namespace heartlab::config {

/// A family as written by the user. Logs of B and C may be given directly
/// (lnB1 = ...) or through the coefficient (B1 = ...). s_shift moves s_model
/// by the given amount through B1.
struct FamilySpec {
  std::string name;
  std::string lambda = "0.5";
  std::string mu = "12";
  std::map<std::string, std::string> coeffs;  // B1, lnB1, B2, lnB2, C1, lnC1, C2, lnC2
  std::optional<std::string> s_shift;

  model::FamilyParams resolve(Precision P) const {
    auto log_coeff = [&](const std::string& key, const char* fallback_ln) {
      const auto ln = coeffs.find("ln" + key);
      const auto raw = coeffs.find(key);
      if (ln != coeffs.end() && raw != coeffs.end()) {
        throw ConfigError("family " + name + ": both " + key + " and ln" + key + " given");
      }
      if (ln != coeffs.end()) return Real::parse(ln->second, P);
      if (raw != coeffs.end()) {
        const Real v = Real::parse(raw->second, P);
        if (!(v > 0.0)) throw ParamError("family " + name + ": " + key + " must be positive");
        return log(v);
      }
      return Real::parse(fallback_ln, P);
    };
    model::FamilyParams p{Real::parse(lambda, P), Real::parse(mu, P), log_coeff("B1", "0"),
                          log_coeff("B2", "0"),   log_coeff("C1", "1"), log_coeff("C2", "1")};
    if (s_shift) {
      const model::Derived d = model::derive(p);
      p.ln_B1 = d.w_I - exp(d.c_I + Real::parse(*s_shift, P));
    }
    return p;
  }
};

/// P0 and the derived families used throughout the experiments.
inline std::optional<FamilySpec> builtin_family(const std::string& name) {
  FamilySpec f;
  f.name = name;
  if (name == "P0") return f;
  if (name == "P1") {  // s shifted by gamma: tau + 1
    f.coeffs["lnB1"] = "-4";
    return f;
  }
  if (name == "Pq") {  // s shifted by beta: tau + A
    f.coeffs["lnB1"] = "-2";
    return f;
  }
  if (name == "P2") {
    f.s_shift = "0.37";
    return f;
  }
  if (name == "Pmu") {
    f.mu = "12.001";
    return f;
  }
  return std::nullopt;
}

inline const std::set<std::string>& family_keys() {
  static const std::set<std::string> k{"name", "lambda", "mu", "B1", "lnB1", "B2", "lnB2",
                                       "C1",   "lnC1",   "C2", "lnC2", "s_shift"};
  return k;
}

inline const std::set<std::string>& run_keys() {
  static const std::set<std::string> k{"precision", "depth",   "sigma_tol", "p_bound", "q_bound", "lattice_tol",
                                       "seed",      "format",  "max_drop",  "n_max",   "min_overlap"};
  return k;
}

struct RunSettings {
  std::optional<std::string> precision;  // bits or "auto"
  std::map<std::string, std::string> values;
};

struct ConfigFile {
  std::map<std::string, FamilySpec> families;  // by section name; "" for top level
  RunSettings run;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& v, const std::string& where) {
  if (v.size() >= 2 && v.front() == '"') {
    if (v.back() != '"') throw ConfigError(where + ": unterminated string");
    return v.substr(1, v.size() - 2);
  }
  return v;
}

}  // namespace detail

/// Sections: top level or [family] / [family.NAME] hold one family each;
/// [run] holds run settings. Values are kept as text.
inline ConfigFile parse_config(const std::string& text, const std::string& origin = "config") {
  ConfigFile cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  std::string section;  // "", "run", or "family:<name>"
  auto family_for = [&](const std::string& sec) -> FamilySpec& {
    const std::string key = sec.rfind("family:", 0) == 0 ? sec.substr(7) : "";
    auto it = cfg.families.find(key);
    if (it == cfg.families.end()) {
      it = cfg.families.emplace(key, FamilySpec{}).first;
      it->second.name = key;
    }
    return it->second;
  };
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      const std::string name = detail::trim(line.substr(1, line.size() - 2));
      if (name == "run") {
        section = "run";
      } else if (name == "family") {
        section = "family:";
      } else if (name.rfind("family.", 0) == 0 && name.size() > 7) {
        section = "family:" + name.substr(7);
      } else {
        throw ConfigError(where + ": unknown section [" + name + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::unquote(detail::trim(line.substr(eq + 1)), where);
    if (section == "run") {
      if (!run_keys().count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
      if (key == "precision") {
        cfg.run.precision = value;
      } else {
        cfg.run.values[key] = value;
      }
      continue;
    }
    if (!family_keys().count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    FamilySpec& f = family_for(section);
    if (key == "name") {
      f.name = value;
    } else if (key == "lambda") {
      f.lambda = value;
    } else if (key == "mu") {
      f.mu = value;
    } else if (key == "s_shift") {
      f.s_shift = value;
    } else {
      f.coeffs[key] = value;
    }
  }
  return cfg;
}

inline ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// A builtin name or a path to a file holding exactly one family.
inline FamilySpec family_from_argument(const std::string& arg) {
  if (auto b = builtin_family(arg)) return *b;
  ConfigFile cfg = load_config(arg);
  if (cfg.families.size() != 1) {
    throw ConfigError("'" + arg + "' must define exactly one family (found " + std::to_string(cfg.families.size()) + ")");
  }
  FamilySpec f = cfg.families.begin()->second;
  if (f.name.empty()) f.name = arg;
  return f;
}

/// Bits from "256" style text; "auto" yields nullopt.
inline std::optional<Precision> parse_precision(const std::string& text, const std::string& where) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const long bits = std::stol(text, &used);
    if (used != text.size() || bits < 64 || bits > 1 << 20) throw ConfigError(where + ": precision out of range");
    return static_cast<Precision>(bits);
  } catch (const std::logic_error&) {
    throw ConfigError(where + ": precision must be an integer number of bits or 'auto'");
  }
}

/// Resolved precision request: config < environment < flag.
inline std::string precision_request(const std::optional<std::string>& from_config,
                                     const std::optional<std::string>& from_flag) {
  std::string chosen = from_config.value_or("256");
  if (const char* env = std::getenv("HEARTLAB_PRECISION"); env && *env) chosen = env;
  if (from_flag) chosen = *from_flag;
  return chosen;
}

}  // namespace heartlab::config
