#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "heartlab/bifurcations.hpp"
#include "heartlab/config.hpp"
#include "heartlab/errors.hpp"
#include "heartlab/model.hpp"
#include "oracles.hpp"

using namespace heartlab;
using namespace heartlab::model;

namespace {

FamilyParams P0() { return config::builtin_family("P0")->resolve(256); }

FamilyParams with_mu(const char* lambda, const char* mu) {
  config::FamilySpec f;
  f.lambda = lambda;
  f.mu = mu;
  return f.resolve(256);
}

}  // namespace

TEST(Derive, ReferenceFamily) {
  const Derived d = derive(P0());
  using C = oracle::ClosedFormP0;
  EXPECT_NEAR(d.nu.to_double(), 3.0, 1e-15);
  EXPECT_NEAR(d.gamma.to_double(), static_cast<double>(C::gamma()), 1e-15);
  EXPECT_NEAR(d.beta.to_double(), static_cast<double>(C::beta()), 1e-15);
  EXPECT_NEAR(d.A.to_double(), 0.6309297536, 1e-10);
  EXPECT_NEAR(d.c_I.to_double(), static_cast<double>(C::c_I()), 1e-15);
  EXPECT_NEAR(d.c_E.to_double(), static_cast<double>(C::c_E()), 1e-15);
  EXPECT_NEAR(d.s_model.to_double(), 1.3862944, 1e-7);
  EXPECT_NEAR(d.tau_model.to_double(), 1.2618595, 1e-7);
  EXPECT_NEAR(d.tau_model.to_double(), static_cast<double>(C::tau()), 1e-15);
  ASSERT_TRUE(d.s_paper.has_value());
  ASSERT_TRUE(d.tau_paper.has_value());
  // the verbatim formula differs from the model intercept by ln(nu) in the E term
  EXPECT_NEAR((d.s_model - *d.s_paper).to_double(), std::log(3.0), 1e-15);
  EXPECT_NEAR((*d.tau_paper * d.gamma - *d.s_paper).to_double(), 0.0, 1e-60);
}

TEST(Derive, RatioExample) {
  const Derived d = derive(with_mu("0.5", "16"));
  EXPECT_NEAR(d.nu.to_double(), 4.0, 1e-15);
  EXPECT_NEAR(d.A.to_double(), 0.5, 1e-15);
}

TEST(Derive, RejectsNonExpandingFamily) {
  EXPECT_THROW(derive(with_mu("0.5", "2")), ParamError);
  EXPECT_THROW(derive(with_mu("1.5", "12")), ParamError);
  auto p = P0();
  p.ln_B1 = Real(3.0);  // above ln C1/(1 - lambda) = 2
  EXPECT_THROW(derive(p), ParamError);
}

TEST(Rho, Examples) {
  EXPECT_EQ(rho(SigmaParam{Real(0.0)}).ln_abs, Real(-1.0));
  EXPECT_NEAR(rho(SigmaParam{Real::ln2(256)}).ln_abs.to_double(), -2.0, 1e-70);
  EXPECT_NEAR(rho(SigmaParam{Real(10.0)}).ln_abs.to_double(), -22026.4658, 1e-4);
}

TEST(Steps, EndpointExchange) {
  const auto p = P0();
  for (double s : {-2.0, 0.0, 3.5, 12.0}) {
    const SigmaParam sp{Real(s)};
    const LnValue f = F_step(LnValue::zero(), sp, p);
    const LnValue g = G_step(LnValue::zero(), sp, p);
    ASSERT_TRUE(f.is_negative());
    ASSERT_TRUE(g.is_negative());
    EXPECT_EQ(f.ln_abs, rho(sp).ln_abs);
    EXPECT_EQ(g.ln_abs, rho(sp).ln_abs);
  }
}

TEST(Steps, Examples) {
  const auto p = P0();
  const SigmaParam sp = SigmaParam::from_ln_eps(Real(-100.0));
  const LnValue f = F_step(LnValue::positive(Real(0.0)), sp, p);
  ASSERT_TRUE(f.is_positive());
  EXPECT_LT(abs(f.ln_abs - (Real(-1.0) + log1p(-exp(Real(-99.0))))), Real::pow2(-240, 256));

  const SigmaParam tiny = SigmaParam::from_ln_eps(Real(-1e6));
  EXPECT_NEAR(G_step(LnValue::positive(Real(-1.0)), tiny, p).ln_abs.to_double(), -4.0, 1e-60);
  EXPECT_NEAR(G0_step(LnValue::positive(Real(1.0)), p).ln_abs.to_double(), 0.0, 1e-60);
  EXPECT_NEAR(F0_step(LnValue::positive(Real(-2.0)), p).ln_abs.to_double(), 3.0 * -2.0 - 1.0, 1e-60);
  EXPECT_THROW(F_step(LnValue::negative(Real(0.0)), sp, p), DomainError);
}

TEST(Steps, ContractionOnTheWindingSide) {
  const auto p = P0();
  const SigmaParam sp = SigmaParam::from_ln_eps(Real(-1e4));
  auto slope = [&](double ln_x) {
    const Real x = exp(Real(ln_x));
    const Real h = x * 1e-30;
    const Real f1 = F_step(LnValue::positive(log(x + h)), sp, p).to_real();
    const Real f0 = F_step(LnValue::positive(log(x)), sp, p).to_real();
    return ((f1 - f0) / h).to_double();
  };
  for (double ln_x = -50.0; ln_x <= -1.25; ln_x += 0.25) EXPECT_LT(slope(ln_x), 0.1) << ln_x;
  // at ln x = -1 the slope is 3 e^-3 > 1/10
  EXPECT_NEAR(slope(-1.0), 3.0 * std::exp(-3.0), 1e-12);
}

TEST(Steps, EpsDerivativeIsMinusOne) {
  const auto p = P0();
  for (double ln_x : {-0.5, -3.0, -10.0}) {
    const Real eps = exp(Real(-1.0));
    const Real h(1e-30);
    const auto at = [&](const Real& e) {
      return F_step(LnValue::positive(Real(ln_x)), SigmaParam::from_ln_eps(log(e)), p).to_real();
    };
    const Real d = (at(eps + h) - at(eps)) / h;
    EXPECT_NEAR(d.to_double(), -1.0, 1e-12) << ln_x;
  }
}

TEST(Wind, LandsInTheGap) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 9.0);
  const std::vector<FamilyParams> fams = {P0(), config::builtin_family("P1")->resolve(256),
                                          config::builtin_family("Pq")->resolve(256),
                                          config::builtin_family("P2")->resolve(256)};
  for (int j = 0; j < 1000; ++j) {
    const SigmaParam sp{Real(u(rng))};
    const auto& p = fams[static_cast<std::size_t>(j) % fams.size()];
    for (MapKind kind : {MapKind::F, MapKind::G}) {
      const GapLanding g = wind(kind, sp, p, 200);
      EXPECT_GE(g.turns, 1);
      ASSERT_FALSE(g.position.is_positive());
      if (g.position.is_negative()) {
        EXPECT_LE(g.position.ln_abs, rho(sp).ln_abs);
      }
    }
  }
}

TEST(Wind, ExactConnectionAndMidInterval) {
  const auto p = P0();
  bif::LocateOptions fine;
  fine.tol = 1e-60;
  const Real e3 = bif::locate_LE(3, p, fine).sigma;
  const Real e4 = bif::locate_LE(4, p, fine).sigma;
  const GapLanding at = wind(MapKind::F, SigmaParam{e3}, p, 10);
  EXPECT_TRUE(at.exact_zero);
  EXPECT_EQ(at.turns, 3);

  const Real mid = ldexp(e3 + e4, -1);
  const GapLanding in = wind(MapKind::F, SigmaParam{mid}, p, 10);
  EXPECT_EQ(in.turns, 4);
  ASSERT_TRUE(in.position.is_negative());
  EXPECT_LT(in.position.ln_abs, rho(SigmaParam{mid}).ln_abs);

  // direct iteration in the x-chart
  const double eps = std::exp(-std::exp(mid.to_double()));
  double x = 1.0;
  int turns = 0;
  do {
    x = x * x * x / std::exp(1.0) - eps;
    ++turns;
  } while (x > 0.0);
  EXPECT_EQ(turns, 4);
  EXPECT_NEAR(in.position.to_real().to_double(), x, 1e-12 * eps + 1e-300);
}

TEST(Wind, TurnBudget) {
  EXPECT_THROW(wind(MapKind::F, SigmaParam{Real(40.0)}, P0(), 1), DepthError);
  EXPECT_THROW(wind(MapKind::F, SigmaParam{Real(0.0)}, P0(), 0), DomainError);
}

TEST(CoordinateChange, Examples) {
  const SigmaParam sp{Real(0.5)};
  const LnValue r = rho(sp);
  const LnValue y0 = coordinate_change(LnValue::zero(), sp);
  ASSERT_TRUE(y0.is_negative());
  EXPECT_EQ(y0.ln_abs, r.ln_abs);
  EXPECT_TRUE(coordinate_change(LnValue::negative(r.ln_abs), sp).is_zero());
  const LnValue half = LnValue::negative(r.ln_abs - Real::ln2(256));
  const LnValue y = coordinate_change(half, sp);
  ASSERT_TRUE(y.is_negative());
  EXPECT_LT(abs(y.ln_abs - half.ln_abs), Real::pow2(-240, 256));
}
