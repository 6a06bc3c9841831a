#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "heartlab/bifurcations.hpp"
#include "heartlab/config.hpp"
#include "heartlab/errors.hpp"
#include "oracles.hpp"

using namespace heartlab;
using namespace heartlab::bif;

namespace {

model::FamilyParams family(const char* name, Precision P = 256) { return config::builtin_family(name)->resolve(P); }

const model::FamilyParams& P0() {
  static const model::FamilyParams p = family("P0");
  return p;
}

/// Root function of the n-th (F) or k-th (G) connection, from the oracle.
std::optional<Real> oracle_root(model::MapKind kind, int index, const Real& sigma) {
  const auto& p = P0();
  if (kind == model::MapKind::F) {
    return oracle::formal_root(p.lambda * p.lambda * p.mu, -p.ln_C2, p.ln_B2, index, sigma);
  }
  return oracle::formal_root(1.0 / p.lambda, -p.ln_C1 / p.lambda, p.ln_B1, index, sigma);
}

/// The single grid cell of [lo, hi] where the oracle root function changes sign.
std::pair<Real, Real> oracle_cell(model::MapKind kind, int index, double lo, double hi, int points = 2000) {
  const auto cells = oracle::sign_change_cells([&](const Real& s) { return oracle_root(kind, index, s); },
                                               Real(lo), Real(hi), points);
  EXPECT_EQ(cells.size(), 1u) << "index " << index;
  return cells.empty() ? std::pair(Real(0.0), Real(0.0)) : cells.front();
}

int landing_sign(const Real& sigma, int n, int k) {
  const model::SigmaParam s{sigma};
  const auto e = model::wind(model::MapKind::F, s, P0(), n + 1);
  const auto i = model::wind(model::MapKind::G, s, P0(), k + 1);
  if (e.turns != n || i.turns != k) return 0;
  return static_cast<int>(ln_add(ln_add(i.position, e.position), LnValue::positive(s.ln_eps())).sign);
}

}  // namespace

TEST(LocateLE, TenthConnectionAgainstGrid) {
  const auto g = oracle::ClosedFormP0::gamma();
  const double guess = static_cast<double>(10 * g + oracle::ClosedFormP0::c_E());
  const auto [lo, hi] = oracle_cell(model::MapKind::F, 10, guess - 0.5, guess + 0.5);
  const Real s = locate_LE(10, P0()).sigma;
  EXPECT_GE(s, lo);
  EXPECT_LE(s, hi);
  EXPECT_NEAR(s.to_double(), 10.2930, 1e-4);
  EXPECT_LE(std::fabs(s.to_double() - guess), 3.0 * std::pow(3.0, -10));
}

TEST(LocateLE, FirstConnectionAtZero) {
  EXPECT_LE(abs(locate_LE(1, P0()).sigma), Real(1e-24));
  LocateOptions bad;
  bad.tol = 0.0;
  EXPECT_THROW(locate_LE(3, P0(), bad), DomainError);
}

TEST(LocateLI, TenthConnectionAgainstGrid) {
  const double guess = 11.0 * std::log(2.0);
  const auto [lo, hi] = oracle_cell(model::MapKind::G, 10, guess - 0.3, guess + 0.3);
  const Real s = locate_LI(10, P0()).sigma;
  EXPECT_GE(s, lo);
  EXPECT_LE(s, hi);
  EXPECT_NEAR(s.to_double(), 7.6246, 2e-2);
}

TEST(LocateLI, FirstConnectionAndBudget) {
  EXPECT_LE(abs(locate_LI(1, P0()).sigma - Real::ln2(256)), Real(1e-24));
  EXPECT_THROW(locate_LI(200, P0()), DepthError);
}

TEST(Progressions, PerturbationDecay) {
  const Real g = log(Real(3.0));
  const Real b = Real::ln2(256);
  std::vector<ConnectionEvent> le, li;
  for (int j = 5; j <= 26; ++j) {
    le.push_back(locate_LE(j, P0()));
    li.push_back(locate_LI(j, P0()));
  }
  for (std::size_t j = 0; j + 1 < le.size(); ++j) {
    const int n = 5 + static_cast<int>(j);
    EXPECT_LE(abs(le[j + 1].sigma - le[j].sigma - g).to_double(), 10.0 * std::pow(3.0, -n)) << n;
    EXPECT_LE(abs(li[j + 1].sigma - li[j].sigma - b).to_double(), 10.0 * std::pow(0.5, n)) << n;
  }
}

TEST(Progressions, FitExamples) {
  std::vector<ConnectionEvent> le;
  for (int n = 10; n <= 20; ++n) le.push_back(locate_LE(n, P0()));
  const auto f = progression_fit(le);
  EXPECT_NEAR(f.common_difference.to_double(), std::log(3.0), 1e-8);
  EXPECT_NEAR(f.intercept.to_double(), -std::log(2.0), 1e-7);
  EXPECT_TRUE(f.residuals_decay());

  std::vector<ConnectionEvent> exact;
  for (int n = 1; n <= 6; ++n) {
    ConnectionEvent e;
    e.mark = Mark::LE;
    e.n = n;
    e.sigma = Real(static_cast<long>(n), 256) * 0.75 + 0.125;
    exact.push_back(e);
  }
  for (const auto& r : progression_fit(exact).residuals) EXPECT_TRUE(r.is_zero());
  exact.resize(3);
  EXPECT_THROW(progression_fit(exact), DomainError);
}

TEST(Progressions, LIFitConvergesToLn2) {
  std::vector<ConnectionEvent> li;
  for (int k = 10; k <= 26; ++k) li.push_back(locate_LI(k, P0()));
  const auto f = progression_fit(li);
  EXPECT_NEAR(f.common_difference.to_double(), std::log(2.0), 10.0 * std::pow(0.5, 25));
  EXPECT_NEAR(f.intercept.to_double(), std::log(2.0), 27 * 10.0 * std::pow(0.5, 25));
}

TEST(Progressions, FittedRatioMatchesA) {
  std::vector<ConnectionEvent> le, li;
  for (int j = 16; j <= 20; ++j) {
    le.push_back(locate_LE(j, P0()));
    li.push_back(locate_LI(j, P0()));
  }
  const Real A_fit = progression_fit(li).common_difference / progression_fit(le).common_difference;
  EXPECT_LE(abs(A_fit - model::derive(P0()).A).to_double(), 1e-8);
}

TEST(Scan, FirstSixEventsAgainstGrid) {
  std::vector<std::pair<double, char>> oracle_events;
  for (int j = 1; j <= 6; ++j) {
    const auto e = oracle_cell(model::MapKind::F, j, -1.0, 7.5, 6000);
    const auto i = oracle_cell(model::MapKind::G, j, -1.0, 7.5, 6000);
    oracle_events.emplace_back(e.first.to_double(), 'E');
    oracle_events.emplace_back(i.first.to_double(), 'I');
  }
  std::sort(oracle_events.begin(), oracle_events.end());
  std::string expect;
  for (int j = 0; j < 6; ++j) expect.push_back(oracle_events[static_cast<std::size_t>(j)].second);

  ScanOptions o;
  o.depth = 6;
  const auto ms = scan(P0(), o);
  std::string got, base;
  for (const auto& e : ms.events) {
    got.push_back(letter(e.mark));
    if (e.mark != Mark::EI) base.push_back(letter(e.mark));
    EXPECT_TRUE(e.well_formed());
  }
  EXPECT_EQ(base, expect);
  EXPECT_EQ(got, "EXIXEXIXEXI");
  EXPECT_TRUE(ms.strictly_increasing());
}

TEST(Scan, EmptyHorizonAndBadInput) {
  ScanOptions o;
  o.sigma_max = Real(-5.0);
  EXPECT_TRUE(scan(P0(), o).events.empty());
  EXPECT_THROW(scan(P0(), ScanOptions{}), DomainError);
}

TEST(Scan, TunedTieIsResonant) {
  LocateOptions fine;
  fine.tol = 1e-60;
  const Real i8 = locate_LI(8, P0(), fine).sigma;
  auto tuned = [&](const Real& ln_B2) {
    auto p = P0();
    p.ln_B2 = ln_B2;
    return p;
  };
  // e_5 moves right as ln B2 decreases
  const Real ln_B2 = bisect_monotone(
      [&](const Real& x) { return i8 - locate_LE(5, tuned(x), fine).sigma; }, Real(-3.0), Real(-0.5), Real(1e-60));
  ScanOptions o;
  o.depth = 16;
  o.with_ei = false;
  EXPECT_THROW(scan(tuned(ln_B2), o), ResonanceError);
}

TEST(Scan, PrecisionEscalation) {
  ScanOptions o;
  o.depth = 20;
  const auto a = scan(P0(), o);
  const auto b = scan(family("P0", 320), o);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t j = 0; j < a.events.size(); ++j) {
    EXPECT_EQ(a.events[j].mark, b.events[j].mark);
    EXPECT_LE(abs(a.events[j].sigma.with_precision(320) - b.events[j].sigma), Real::pow2(-128, 320));
  }
}

TEST(LocateEI, OneSignChangeAfterSigmaTwo) {
  ScanOptions o;
  o.depth = 12;
  o.with_ei = false;
  const auto base = scan(P0(), o).events;
  std::size_t j = 0;
  while (base[j].sigma < 2.0) ++j;
  const auto [n, k] = interval_counts(base, j);
  const Real& lo = base[j].sigma;
  const Real& hi = base[j + 1].sigma;
  // this root sits about 1e-13 below hi, so the grid refines towards hi
  const auto cells = oracle::sign_change_cells(
      [&](const Real& s) -> std::optional<Real> { return Real(static_cast<double>(landing_sign(s, n, k))); },
      oracle::graded_grid(lo, hi, 1000, 1e-20));
  ASSERT_EQ(cells.size(), 1u);
  const auto ei = locate_EI(lo, hi, n, k, P0());
  EXPECT_FALSE(ei.ln_offset.has_value());
  EXPECT_GE(ei.sigma, cells.front().first);
  EXPECT_LE(ei.sigma, cells.front().second);
  // d vanishes at the root: opposite signs a hair to either side
  const Real h(1e-20);
  EXPECT_NE(d_value(n, k, model::SigmaParam{ei.sigma - h}, P0()).sign,
            d_value(n, k, model::SigmaParam{ei.sigma + h}, P0()).sign);
  EXPECT_THROW(locate_EI(lo, lo, n, k, P0()), DomainError);
}

TEST(LocateEI, DeepRootsCarryTheirGap) {
  ScanOptions o;
  o.depth = 30;
  const auto ms = scan(P0(), o);
  int deep = 0;
  for (std::size_t j = 0; j + 1 < ms.events.size(); ++j) {
    const auto& e = ms.events[j];
    if (e.mark != Mark::EI || !e.ln_offset) continue;
    ++deep;
    EXPECT_LT(*e.ln_offset, Real(std::log(1e-24)));
    EXPECT_TRUE(precedes(e, ms.events[j + 1]));
    EXPECT_LE(abs(ms.events[j + 1].sigma - e.sigma), Real(1e-24));
  }
  EXPECT_GT(deep, 10);
}

TEST(DValue, ZeroCountsArePlumbing) {
  const model::SigmaParam s{Real(0.3)};
  const LnValue d = d_value(0, 0, s, P0());
  // y = B1 = 1, x = B2 = 1: d = 1 + 1 + eps
  EXPECT_NEAR(d.to_real().to_double(), 2.0 + std::exp(-std::exp(0.3)), 1e-15);
}

TEST(Monotone, HoldsOnAnIntervalWithEightITurns) {
  ScanOptions o;
  o.depth = 20;
  o.with_ei = false;
  const auto base = scan(P0(), o).events;
  std::optional<std::size_t> pick;
  for (std::size_t j = 0; j + 1 < base.size() && !pick; ++j) {
    if (interval_counts(base, j).second == 8) pick = j;
  }
  ASSERT_TRUE(pick);
  const auto [n, k] = interval_counts(base, *pick);
  std::vector<Real> a, b;
  for (int t = 1; t <= 10; ++t) {
    a.push_back(base[*pick].sigma + (base[*pick + 1].sigma - base[*pick].sigma) * Real(t / 11.0));
    b.push_back(a.back().with_precision(320));
  }
  const auto ra = check_monotone_d(n, k, a, P0());
  const auto rb = check_monotone_d(n, k, b, family("P0", 320));
  EXPECT_TRUE(ra.all_hold());
  EXPECT_TRUE(rb.all_hold());
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_NEAR(ra.samples[t].dd_deps, rb.samples[t].dd_deps, 1e-6 * std::fabs(rb.samples[t].dd_deps));
    EXPECT_NEAR(ra.samples[t].dF_deps, rb.samples[t].dF_deps, 1e-6 * std::fabs(rb.samples[t].dF_deps));
    EXPECT_NEAR(ra.samples[t].dG_deps, rb.samples[t].dG_deps, 1e-6 * std::fabs(rb.samples[t].dG_deps));
  }
}

TEST(Monotone, FlagsOutOfDomainSamples) {
  const auto r = check_monotone_d(5, 8, {Real(1.0), Real(4.5)}, P0());
  EXPECT_EQ(r.out_of_domain(), 2u);
  EXPECT_FALSE(r.all_hold());
  EXPECT_THROW(check_monotone_d(1, 3, {Real(1.0)}, P0()), DomainError);
  EXPECT_DOUBLE_EQ(kRhoPrime / 2, 0.5);
}
