#include <gtest/gtest.h>

#include <cstdlib>
#include <string>

#include "heartlab/config.hpp"
#include "heartlab/errors.hpp"

using namespace heartlab;
using namespace heartlab::config;

#ifndef HEARTLAB_SOURCE_DIR
#define HEARTLAB_SOURCE_DIR "."
#endif

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "t.toml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

class ScopedEnv {
 public:
  ScopedEnv(const char* key, const char* value) : key_(key) {
    if (const char* old = std::getenv(key)) old_ = old;
    if (value) {
      setenv(key, value, 1);
    } else {
      unsetenv(key);
    }
  }
  ~ScopedEnv() {
    if (old_) {
      setenv(key_, old_->c_str(), 1);
    } else {
      unsetenv(key_);
    }
  }

 private:
  const char* key_;
  std::optional<std::string> old_;
};

}  // namespace

TEST(ParseConfig, SectionsAndValues) {
  const ConfigFile cfg = parse_config(
      "# comment\n"
      "[run]\n"
      "precision = 320\n"
      "depth = 40   # trailing comment\n"
      "\n"
      "[family.A]\n"
      "mu = \"12.5\"\n"
      "lnB1 = -4\n"
      "[family.B]\n"
      "s_shift = 0.37\n");
  ASSERT_EQ(cfg.families.size(), 2u);
  EXPECT_EQ(cfg.families.at("A").mu, "12.5");
  EXPECT_EQ(cfg.families.at("A").coeffs.at("lnB1"), "-4");
  EXPECT_EQ(cfg.families.at("A").lambda, "0.5");
  EXPECT_EQ(*cfg.families.at("B").s_shift, "0.37");
  EXPECT_EQ(*cfg.run.precision, "320");
  EXPECT_EQ(cfg.run.values.at("depth"), "40");
}

TEST(ParseConfig, ErrorsNameTheLineAndKey) {
  const std::string e1 = error_of("[run]\ndepth = 3\ncolour = red\n");
  EXPECT_NE(e1.find("t.toml:3"), std::string::npos) << e1;
  EXPECT_NE(e1.find("colour"), std::string::npos) << e1;
  EXPECT_NE(error_of("[family]\nnu = 3\n").find("nu"), std::string::npos);
  EXPECT_NE(error_of("[sweep]\n").find("unknown section"), std::string::npos);
  EXPECT_NE(error_of("[run\n").find("malformed"), std::string::npos);
  EXPECT_NE(error_of("mu 12\n").find("key = value"), std::string::npos);
  EXPECT_NE(error_of("mu = \"12\n").find("unterminated"), std::string::npos);
}

TEST(FamilySpec, ResolveAndConflicts) {
  FamilySpec f;
  f.name = "x";
  f.coeffs["B1"] = "1";
  f.coeffs["lnB1"] = "0";
  EXPECT_THROW(f.resolve(256), ConfigError);
  f.coeffs.erase("lnB1");
  f.coeffs["B1"] = "-1";
  EXPECT_THROW(f.resolve(256), ParamError);
  f.coeffs["B1"] = "0.5";
  EXPECT_NEAR(f.resolve(256).ln_B1.to_double(), std::log(0.5), 1e-15);
  EXPECT_EQ(f.resolve(320).ln_B1.precision(), 320);
}

TEST(FamilySpec, BuiltinShifts) {
  const auto d0 = model::derive(builtin_family("P0")->resolve(256));
  const auto d1 = model::derive(builtin_family("P1")->resolve(256));
  const auto dq = model::derive(builtin_family("Pq")->resolve(256));
  const auto d2 = model::derive(builtin_family("P2")->resolve(256));
  EXPECT_LT(abs(d1.s_model - d0.s_model - d0.gamma), Real::pow2(-200, 256));
  EXPECT_LT(abs(dq.s_model - d0.s_model - d0.beta), Real::pow2(-200, 256));
  EXPECT_NEAR((d2.s_model - d0.s_model).to_double(), 0.37, 1e-15);
  EXPECT_EQ(d2.A, d0.A);
  EXPECT_NE(model::derive(builtin_family("Pmu")->resolve(256)).A, d0.A);
  EXPECT_FALSE(builtin_family("P9"));
}

TEST(FamilyFromArgument, FileAndBuiltin) {
  EXPECT_EQ(family_from_argument("P1").coeffs.at("lnB1"), "-4");
  const FamilySpec f = family_from_argument(HEARTLAB_SOURCE_DIR "/configs/P0.toml");
  EXPECT_EQ(f.name, "P0");
  const auto d = model::derive(f.resolve(256));
  const auto ref = model::derive(builtin_family("P0")->resolve(256));
  EXPECT_EQ(d.s_model, ref.s_model);
  EXPECT_THROW(family_from_argument(HEARTLAB_SOURCE_DIR "/configs/experiments.toml"), ConfigError);
  EXPECT_THROW(family_from_argument("/nonexistent/file.toml"), ConfigError);
}

TEST(Precision, ParseRanges) {
  EXPECT_EQ(*parse_precision("256", "x"), 256);
  EXPECT_FALSE(parse_precision("auto", "x"));
  EXPECT_THROW(parse_precision("32", "x"), ConfigError);
  EXPECT_THROW(parse_precision("256bits", "x"), ConfigError);
  EXPECT_THROW(parse_precision("", "x"), ConfigError);
}

TEST(Precision, ConfigThenEnvironmentThenFlag) {
  {
    ScopedEnv env("HEARTLAB_PRECISION", nullptr);
    EXPECT_EQ(precision_request(std::nullopt, std::nullopt), "256");
    EXPECT_EQ(precision_request(std::string("320"), std::nullopt), "320");
  }
  {
    ScopedEnv env("HEARTLAB_PRECISION", "512");
    EXPECT_EQ(precision_request(std::string("320"), std::nullopt), "512");
    EXPECT_EQ(precision_request(std::string("320"), std::string("auto")), "auto");
  }
}
