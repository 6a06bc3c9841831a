#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "heartlab/arithmetic.hpp"
#include "heartlab/config.hpp"
#include "heartlab/errors.hpp"
#include "oracles.hpp"

using namespace heartlab;
using namespace heartlab::arith;

namespace {

Real A0() { return Real::ln2(256) / log(Real(3.0)); }
Real golden() { return (sqrt(Real(5.0)) - 1.0) / 2.0; }

}  // namespace

TEST(Lattice, Examples) {
  const Real tau = Real::parse("1.2618595071429148741990542286855217085991712802637608557413098876773704027");
  const Real tol(1e-9);
  const auto same = equiv_mod_lattice(tau, tau, A0(), 3, 3, tol);
  ASSERT_TRUE(same);
  EXPECT_EQ(same->p, 0);
  EXPECT_EQ(same->q, 0);
  EXPECT_TRUE(same->residual.is_zero());

  const auto shifted = equiv_mod_lattice(tau, tau + 1.0 + 2.0 * A0(), A0(), 3, 3, tol);
  ASSERT_TRUE(shifted);
  EXPECT_EQ(shifted->p, 1);
  EXPECT_EQ(shifted->q, 2);

  EXPECT_FALSE(equiv_mod_lattice(tau, tau + 0.37, A0(), 3, 3, tol));
  EXPECT_FALSE(oracle::brute_lattice(1.25L, 1.62L, oracle::ClosedFormP0::A(), 3, 1e-9L));
  EXPECT_THROW(equiv_mod_lattice(tau, tau, A0(), 0, 3, tol), DomainError);
}

TEST(Lattice, AgreesWithBruteForceAndIsSymmetric) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> coeff(-6, 6);
  std::uniform_real_distribution<double> noise(-1e-12, 1e-12);
  const long double Ad = oracle::ClosedFormP0::A();
  for (int j = 0; j < 200; ++j) {
    const int p = coeff(rng), q = coeff(rng);
    const double t1 = 0.3 + 0.01 * j;
    const bool on_lattice = j % 3 != 0;
    const Real tau1(t1);
    const Real tau2 = on_lattice ? tau1 + Real(static_cast<long>(p), 256) + Real(static_cast<long>(q), 256) * A0() +
                                       Real(noise(rng))
                                 : tau1 + 0.123456789;
    const Real tol(1e-9);
    const auto w = equiv_mod_lattice(tau1, tau2, A0(), 6, 6, tol);
    const auto o = oracle::brute_lattice(t1, static_cast<long double>(tau2.to_double()), Ad, 6, 1e-9L);
    ASSERT_EQ(w.has_value(), o.has_value()) << j;
    if (!w) continue;
    EXPECT_EQ(w->p, o->p);
    EXPECT_EQ(w->q, o->q);
    const auto back = equiv_mod_lattice(tau2, tau1, A0(), 6, 6, tol);
    ASSERT_TRUE(back);
    EXPECT_EQ(back->p, -w->p);
    EXPECT_EQ(back->q, -w->q);
  }
}

TEST(Case1Bound, Examples) {
  EXPECT_EQ(case1_bound(A0(), Real(1.0), Real(0.0)), Real(2.0));
  EXPECT_EQ(case1_bound(A0(), Real(2.0), Real(3.0)), Real(3.0));
  EXPECT_THROW(case1_bound(A0(), Real(0.0), Real(1.0)), DomainError);
}

TEST(Diophantine, GoldenRatioStabilises) {
  const auto a = diophantine_check(golden(), Real(1.0), Real(0.0), 100);
  const auto b = diophantine_check(golden(), Real(1.0), Real(0.0), 500);
  ASSERT_EQ(a.violations.size(), b.violations.size());
  for (std::size_t j = 0; j < a.violations.size(); ++j) {
    EXPECT_EQ(a.violations[j].m, b.violations[j].m);
    EXPECT_EQ(a.violations[j].n, b.violations[j].n);
  }
  EXPECT_EQ(b.verdict, DiophantineReport::Verdict::NoViolationsBeyond);
  EXPECT_LE(b.index, 5);
  EXPECT_THROW(diophantine_check(golden(), Real(0.0), Real(0.0), 10), DomainError);
}

TEST(Diophantine, DoubledRangeFindsNothingNew) {
  struct Case {
    Real A;
    double gamma, s;
  };
  const std::vector<Case> cases = {{golden(), 1.0, 0.0}, {A0(), std::log(3.0), 2.0 * std::log(2.0)},
                                   {A0(), std::log(3.0), 40.0}, {Real(0.3), 2.0, -0.7}};
  for (const auto& c : cases) {
    const auto rep = diophantine_check(c.A, Real(c.gamma), Real(c.s), 80);
    const auto ref = oracle::dioph_doubled(static_cast<long double>(c.A.to_double()), c.gamma, c.s, 80);
    ASSERT_EQ(rep.violations.size(), ref.size()) << c.s;
    for (std::size_t j = 0; j < ref.size(); ++j) {
      EXPECT_EQ(rep.violations[j].m, ref[j].m);
      EXPECT_EQ(rep.violations[j].n, ref[j].n);
    }
  }
}

TEST(Diophantine, ViolationsRevalidateAtDoublePrecision) {
  const auto p = config::builtin_family("P0")->resolve(256);
  const auto q = config::builtin_family("P0")->resolve(512);
  const auto rep = diophantine_check(p, 150);
  const auto dq = model::derive(q);
  for (const auto& v : rep.violations) EXPECT_TRUE(diophantine_inclusion(dq.A, dq.gamma, dq.s_model, v.m, v.n));
  const auto wider = diophantine_check(p, 300);
  for (const auto& v : rep.violations) {
    EXPECT_TRUE(std::any_of(wider.violations.begin(), wider.violations.end(),
                            [&](const Violation& w) { return w.m == v.m && w.n == v.n; }));
  }
}

TEST(Measure, DecayAndBound) {
  const auto a = measure_experiment(1.0, 0.0, 1.0, 10, 100000, 1);
  const auto b = measure_experiment(1.0, 0.0, 1.0, 20, 100000, 1);
  EXPECT_NEAR(a.bound, 2.28, 0.01);
  EXPECT_TRUE(a.within_bound());
  EXPECT_TRUE(b.within_bound());
  EXPECT_GE(a.union_measure / b.union_measure, 1.8);
  EXPECT_TRUE(a.within_3_sigma());
  EXPECT_TRUE(b.within_3_sigma());
  EXPECT_EQ(measure_experiment(1.0, 0.0, 1.0, 10, 0, 1, 1).union_measure, 0.0);
  EXPECT_THROW(measure_experiment(1.0, 0.0, 0.0, 10, 10, 1), DomainError);
}

TEST(Measure, BoundHoldsAcrossParameters) {
  for (double g : {0.5, 1.0, 3.0}) {
    for (double s : {-1.0, 0.0, 2.5}) {
      const auto r = measure_experiment(g, s, 2.0, 15, 20000, 9);
      EXPECT_TRUE(r.within_bound()) << g << " " << s;
      EXPECT_TRUE(r.within_3_sigma()) << g << " " << s;
    }
  }
}

TEST(Measure, SameSeedSameReport) {
  const auto a = measure_experiment(1.0, 0.0, 1.0, 10, 5000, 42);
  const auto b = measure_experiment(1.0, 0.0, 1.0, 10, 5000, 42);
  EXPECT_EQ(a.hit_fraction, b.hit_fraction);
  EXPECT_EQ(a.union_measure, b.union_measure);
}

TEST(ContinuedFraction, Examples) {
  const auto g = continued_fraction(golden(), 7);
  const std::vector<std::pair<std::int64_t, std::int64_t>> fib = {{0, 1}, {1, 1}, {1, 2}, {2, 3},
                                                                  {3, 5}, {5, 8}, {8, 13}};
  ASSERT_EQ(g.size(), fib.size());
  for (std::size_t j = 0; j < fib.size(); ++j) {
    EXPECT_EQ(g[j].p, fib[j].first);
    EXPECT_EQ(g[j].q, fib[j].second);
  }
  const auto half = continued_fraction(Real(0.5), 10);
  ASSERT_FALSE(half.empty());
  EXPECT_EQ(half.back().p, 1);
  EXPECT_EQ(half.back().q, 2);
  EXPECT_THROW(continued_fraction(Real(-1.0), 3), DomainError);
}

TEST(ContinuedFraction, TwoPrecisionsAgree) {
  const Real a256 = A0();
  const Real a512 = Real::ln2(512) / log(Real(3.0, 512));
  const auto c = continued_fraction(a256, 20);
  const auto ref = oracle::convergents(a512, 20);
  ASSERT_EQ(c.size(), ref.size());
  for (std::size_t j = 0; j < c.size(); ++j) {
    EXPECT_EQ(c[j].p, ref[j].first);
    EXPECT_EQ(c[j].q, ref[j].second);
    const Real err = abs(a512 - Real(static_cast<long>(c[j].p), 512) / Real(static_cast<long>(c[j].q), 512));
    const Real q2 = Real(static_cast<long>(c[j].q), 512) * Real(static_cast<long>(c[j].q), 512);
    EXPECT_LT(err * q2, Real(1.0, 512));
  }
}

TEST(RationalityGuard, FlagsRationalA) {
  EXPECT_FALSE(rationality_guard(A0()));
  const auto r = rationality_guard(Real::parse("0.375"));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->p, 3);
  EXPECT_EQ(r->q, 8);
}
