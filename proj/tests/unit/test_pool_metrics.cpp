#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "poolfund/errors.hpp"
#include "poolfund/life_table.hpp"
#include "poolfund/pool_metrics.hpp"

using namespace poolfund;

namespace {

// Direct (sum s)^2 / sum s^2 with explicit loops, independent of the library.
double nu_of(const std::vector<double>& s) {
  double a = 0.0, b = 0.0;
  for (double x : s) {
    a += x;
    b += x * x;
  }
  return a * a / b;
}

std::vector<double> repeat(std::vector<double> s, std::size_t copies) {
  std::vector<double> out;
  for (std::size_t c = 0; c < copies; ++c) out.insert(out.end(), s.begin(), s.end());
  return out;
}

SavingsVector random_roster(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> amount(lo, hi);
  std::vector<double> s(n);
  for (double& x : s) x = amount(gen);
  return SavingsVector(std::move(s));
}

}  // namespace

TEST(HashMap, Validation) {
  EXPECT_THROW(SavingsHashMap({}, {}), InputError);
  EXPECT_THROW(SavingsHashMap({1.0, 2.0}, {1.0}), InputError);
  EXPECT_THROW(SavingsHashMap({2.0, 1.0}, {1.0, 1.0}), InputError);
  EXPECT_THROW(SavingsHashMap({1.0, 1.0}, {1.0, 1.0}), InputError);
  EXPECT_THROW(SavingsHashMap({1.0}, {0.0}), InputError);
  EXPECT_THROW(SavingsHashMap({-1.0}, {1.0}), InputError);
  EXPECT_THROW(SavingsHashMap({1.0}, {1.0}, {0.0}), InputError);
  EXPECT_THROW(SavingsHashMap({1.0}, {1.0}, {1.0, 2.0}), InputError);
}

TEST(HashMap, FromSavingsGroupsExactDuplicates) {
  const auto map = SavingsHashMap::from_savings(SavingsVector({3.0, 1.0, 3.0, 2.0, 1.0, 1.0}));
  EXPECT_EQ(std::vector<double>(map.amounts().begin(), map.amounts().end()),
            (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_EQ(std::vector<double>(map.counts().begin(), map.counts().end()),
            (std::vector<double>{3.0, 1.0, 2.0}));
  EXPECT_EQ(map.total_count(), 6.0);
  EXPECT_TRUE(map.has_unit_weights());

  const double next = std::nextafter(1.0, 2.0);
  EXPECT_EQ(SavingsHashMap::from_savings(SavingsVector({1.0, next})).groups(), 2u);
}

TEST(HashMap, FromTermsMergesAndSorts) {
  const std::vector<SavingsTerm> terms = {{2.0, 10.0}, {3.0, 1.0}, {0.5, 10.0}};
  const auto map = SavingsHashMap::from_terms(terms);
  ASSERT_EQ(map.groups(), 2u);
  EXPECT_EQ(map.amounts()[0], 1.0);
  EXPECT_EQ(map.counts()[1], 2.5);
  EXPECT_FALSE(map.has_integer_counts());
  EXPECT_THROW(map.expand(), InputError);
}

TEST(HashMap, ExpandPrefixAndScaling) {
  const SavingsHashMap map({1.0, 10.0}, {3.0, 2.0});
  const auto roster = map.expand();
  EXPECT_EQ(roster.size(), 5u);
  EXPECT_EQ(roster.sum(), 23.0);
  EXPECT_EQ(map.prefix(1).groups(), 1u);
  EXPECT_THROW(map.prefix(0), InputError);
  EXPECT_THROW(map.prefix(3), InputError);
  EXPECT_EQ(map.with_scaled_counts(2.5).counts()[1], 5.0);
  EXPECT_THROW(map.with_scaled_counts(0.0), InputError);
  EXPECT_THROW(SavingsHashMap({1.0}, {2.0}, {0.5}).expand(), InputError);
}

TEST(ImpliedNumber, Examples) {
  EXPECT_EQ(implied_number(SavingsVector::homogeneous(37, 4.2)), 37.0);
  EXPECT_EQ(implied_number(SavingsVector({123.0})), 1.0);
  EXPECT_EQ(implied_number(SavingsVector::two_group(500, 100.0, 500, 200.0)), 900.0);
  EXPECT_EQ(implied_number(SavingsHashMap({100.0, 200.0}, {500.0, 500.0})), 900.0);
  EXPECT_EQ(implied_number(SavingsHashMap({7.0}, {12.0})), 12.0);
}

TEST(ImpliedNumber, WeightsActAsCountMultipliers) {
  const SavingsHashMap weighted({1.0, 4.0}, {3.0, 2.0}, {2.0, 0.5});
  const SavingsHashMap plain({1.0, 4.0}, {6.0, 1.0});
  EXPECT_DOUBLE_EQ(implied_number(weighted), implied_number(plain));
}

TEST(ImpliedNumber, BoundsAndEqualityCase) {
  std::mt19937_64 gen(101);
  std::uniform_int_distribution<std::size_t> size(1, 60);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto s = random_roster(gen, size(gen), 1.0, 100.0);
    const double nu = implied_number(s);
    EXPECT_GE(nu, 1.0 - 1e-12);
    EXPECT_LE(nu, static_cast<double>(s.size()) * (1.0 + 1e-12));
    if (s.size() > 1) {
      EXPECT_LT(nu, static_cast<double>(s.size()));
    }
    EXPECT_NEAR(nu, nu_of({s.begin(), s.end()}), 1e-12 * nu);
  }
}

TEST(ImpliedNumber, OneNewMemberAddsAtMostOne) {
  std::mt19937_64 gen(103);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = random_roster(gen, 1 + trial % 40, 1.0, 50.0);
    const double base = implied_number(s);
    const double x_star = optimal_extension_amount(s);
    std::vector<double> with_best(s.begin(), s.end());
    with_best.push_back(x_star);
    EXPECT_NEAR(nu_of(with_best), base + 1.0, 1e-12 * base);
    for (double factor = 0.05; factor < 5.0; factor += 0.05) {
      const double x = x_star * factor;
      if (std::fabs(factor - 1.0) < 1e-9) continue;
      std::vector<double> extended(s.begin(), s.end());
      extended.push_back(x);
      EXPECT_LT(nu_of(extended), base + 1.0);
    }
    std::vector<double> huge(s.begin(), s.end());
    huge.push_back(1e9 * s.max());
    EXPECT_LT(nu_of(huge), 1.01);
  }
  EXPECT_EQ(optimal_extension_amount(SavingsVector::homogeneous(5, 3.0)), 3.0);
}

TEST(ImpliedNumber, ScaleInvariance) {
  std::mt19937_64 gen(107);
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = random_roster(gen, 30, 0.1, 10.0);
    const double nu = implied_number(s);
    for (double lambda : {1e-6, 0.3, 7.0, 1e8}) {
      EXPECT_NEAR(implied_number(s.scaled(lambda)), nu, 1e-12 * nu);
    }
  }
}

TEST(Merge, RichPoolNeverLosesByAddingPoorer) {
  const auto check = merge_benefit_check(SavingsVector::homogeneous(800, 1.0),
                                         SavingsVector::homogeneous(200, 10.0));
  EXPECT_EQ(check.nu_rich, 200.0);
  EXPECT_GE(check.nu_merged, 200.0);
  EXPECT_THROW(merge_benefit_check(SavingsVector({1.0, 6.0}), SavingsVector({5.0})), InputError);

  std::mt19937_64 gen(109);
  std::uniform_int_distribution<std::size_t> size(1, 30);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto poor = random_roster(gen, size(gen), 1.0, 5.0);
    const auto rich = random_roster(gen, size(gen), 5.0, 20.0);
    const auto c = merge_benefit_check(poor, rich);
    EXPECT_GE(c.nu_merged, c.nu_rich * (1.0 - 1e-12));
  }
}

TEST(LambdaThreshold, SinglePoorSingleRich) {
  const SavingsVector poor({1.0}), rich({10.0});
  const auto lambda = lambda_threshold(poor, rich);
  ASSERT_TRUE(lambda.has_value());
  // 1/lambda must stay below (1/10)(1)(10 - 2) = 0.8.
  EXPECT_DOUBLE_EQ(*lambda, 1.25);
  // At lambda = 1 the merged pair is still ahead: nu(1,10) = 121/101 > 1.
  EXPECT_GT(nu_of({1.0, 10.0}), nu_of({1.0}));
  for (std::size_t copies = 2; copies <= 100; ++copies) {
    auto merged = repeat({1.0}, copies);
    merged.push_back(10.0);
    EXPECT_LT(nu_of(merged), nu_of(repeat({1.0}, copies))) << copies;
  }
}

TEST(LambdaThreshold, HypothesisFailureAndRandomRosters) {
  const SavingsVector poor({1.0, 2.0, 3.0});
  EXPECT_FALSE(lambda_threshold(poor, poor.scaled(1.5)).has_value());

  std::mt19937_64 gen(113);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = random_roster(gen, 1 + trial % 5, 1.0, 3.0);
    const auto r = random_roster(gen, 1 + trial % 3, 8.0, 30.0);
    const auto lambda = lambda_threshold(p, r);
    if (!lambda) continue;
    ++checked;
    const auto first = static_cast<std::size_t>(std::floor(*lambda)) + 1;
    for (std::size_t copies = first; copies < first + 20; ++copies) {
      const auto alone = repeat({p.begin(), p.end()}, copies);
      auto merged = alone;
      merged.insert(merged.end(), r.begin(), r.end());
      EXPECT_LT(nu_of(merged), nu_of(alone));
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(LambdaThreshold, CrossingOfThePoorAndMixedCurves) {
  // Poor members at 0.3 against a fixed rich block at 1: the poor-only pool
  // overtakes the mixed one as its size grows.
  const auto rich = SavingsVector::homogeneous(200, 1.0);
  const auto lambda = lambda_threshold(SavingsVector({0.3}), rich);
  ASSERT_TRUE(lambda.has_value());
  const auto n = static_cast<std::size_t>(std::ceil(*lambda)) + 1;
  const auto poor = SavingsVector::homogeneous(n, 0.3);
  EXPECT_GT(implied_number(poor), implied_number(SavingsVector::two_group(n, 0.3, 200, 1.0)));
}

TEST(WorstCase, Examples) {
  EXPECT_NEAR(worst_case_nu_bounds(1.0, 100.0, 1000.0).lower, 40.0 / 121.0, 1e-15);
  EXPECT_NEAR(worst_case_nu_bounds(1100.0, 100.0, 1000.0).lower, 1100.0 * 40.0 / 121.0, 1e-12);
  EXPECT_NEAR(worst_case_nu_bounds(1100.0, 100.0, 1000.0).lower, 364.0, 0.5);
  EXPECT_NEAR(worst_case_nu_bounds(1.0, 1.0, 2.0).lower, 8.0 / 9.0, 1e-15);
  EXPECT_NEAR(worst_case_nu_exact(2, 1.0, 2.0), 1.8, 1e-15);
  EXPECT_NEAR(worst_case_nu_exact(1100, 100.0, 1000.0), 1100.0 * 40.0 / 121.0, 1e-9);
  EXPECT_THROW(worst_case_nu_bounds(0.5, 1.0, 2.0), InputError);
  EXPECT_THROW(worst_case_nu_bounds(5.0, 2.0, 2.0), InputError);
  EXPECT_THROW(worst_case_nu_bounds(5.0, 0.0, 2.0), InputError);
}

TEST(WorstCase, ExactMinimumMatchesEnumeration) {
  // Brute force over every roster with k members at M and n-k at m.
  for (std::size_t n : {1u, 2u, 7u, 30u}) {
    double best = 1e300;
    for (std::size_t k = 0; k <= n; ++k) {
      std::vector<double> s(n - k, 3.0);
      s.insert(s.end(), k, 11.0);
      best = std::min(best, nu_of(s));
    }
    EXPECT_NEAR(worst_case_nu_exact(n, 3.0, 11.0), best, 1e-12 * best);
  }
}

TEST(WorstCase, Sandwich) {
  std::mt19937_64 gen(127);
  std::uniform_int_distribution<std::size_t> size(1, 400);
  std::uniform_real_distribution<double> log_amount(0.0, std::log(1000.0));
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = size(gen);
    double m = std::exp(log_amount(gen)), big_m = std::exp(log_amount(gen));
    if (m == big_m) continue;
    if (m > big_m) std::swap(m, big_m);
    const auto bounds = worst_case_nu_bounds(static_cast<double>(n), m, big_m);
    const double exact = worst_case_nu_exact(n, m, big_m);
    EXPECT_LE(bounds.lower, exact * (1.0 + 1e-12));
    EXPECT_LE(exact, bounds.upper * (1.0 + 1e-12));
  }
}

TEST(BestPrefix, PoorOnlyWins) {
  const SavingsHashMap map({1.0, 10.0}, {800.0, 200.0});
  const auto scan = best_prefix(map);
  EXPECT_EQ(scan.best_groups, 1u);
  EXPECT_EQ(scan.nu_max, 800.0);
  EXPECT_NEAR(scan.prefix_nu[1], 2800.0 * 2800.0 / 20800.0, 1e-9);
  EXPECT_NEAR(scan.prefix_nu[1], 376.9, 0.05);
  EXPECT_EQ(scan.cumulative_count, (std::vector<double>{800.0, 1000.0}));
  EXPECT_FALSE(is_beneficial(map));
}

TEST(BestPrefix, TiesGoToTheLargerPrefix) {
  // A sliver at 3 lowers nu by about 3e-13 relative, inside the tie tolerance.
  const SavingsHashMap map({1.0, 3.0}, {10.0, 1e-12});
  const auto scan = best_prefix(map);
  EXPECT_LT(scan.prefix_nu[1], scan.prefix_nu[0]);
  EXPECT_EQ(scan.best_groups, 2u);
  EXPECT_TRUE(is_beneficial(map));
}

TEST(BestPrefix, NarrowRangesAreBeneficial) {
  std::mt19937_64 gen(131);
  std::uniform_int_distribution<int> groups(1, 12);
  std::uniform_real_distribution<double> count(0.1, 50.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const int g = groups(gen);
    std::vector<double> amounts(g), counts(g);
    for (double& a : amounts) a = 5.0 * (1.0 + unit(gen));  // max/min <= 2
    std::sort(amounts.begin(), amounts.end());
    amounts.erase(std::unique(amounts.begin(), amounts.end()), amounts.end());
    counts.resize(amounts.size());
    for (double& c : counts) c = count(gen);
    EXPECT_TRUE(is_beneficial(SavingsHashMap(amounts, counts)));
  }
  EXPECT_TRUE(is_beneficial(SavingsVector::two_group(5, 1.0, 5, 2.0)));
}

TEST(BestPrefix, CountScalingKeepsTheVerdict) {
  std::mt19937_64 gen(137);
  std::uniform_real_distribution<double> log_amount(0.0, std::log(100.0));
  std::uniform_real_distribution<double> count(0.5, 20.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> amounts(1 + trial % 8);
    for (double& a : amounts) a = std::exp(log_amount(gen));
    std::sort(amounts.begin(), amounts.end());
    amounts.erase(std::unique(amounts.begin(), amounts.end()), amounts.end());
    std::vector<double> counts(amounts.size());
    for (double& c : counts) c = count(gen);
    const SavingsHashMap map(amounts, counts);
    const bool verdict = is_beneficial(map);
    for (double factor : {0.01, 0.5, 3.0, 1000.0}) {
      const auto scaled = map.with_scaled_counts(factor);
      EXPECT_EQ(is_beneficial(scaled), verdict);
      EXPECT_EQ(best_prefix(scaled).best_groups, best_prefix(map).best_groups);
    }
  }
}

TEST(BruteForce, Examples) {
  const auto homogeneous = brute_force_best_subgroup(SavingsHashMap({4.0}, {9.0}));
  EXPECT_EQ(homogeneous.counts, (std::vector<std::size_t>{9}));
  EXPECT_EQ(homogeneous.nu_max, 9.0);

  const SavingsHashMap map({1.0, 10.0}, {8.0, 2.0});
  const auto best = brute_force_best_subgroup(map);
  EXPECT_EQ(best.counts, (std::vector<std::size_t>{8, 0}));
  EXPECT_EQ(best.nu_max, best_prefix(map).nu_max);
}

TEST(BruteForce, Limits) {
  EXPECT_THROW(brute_force_best_subgroup(SavingsHashMap({1.0}, {2.5})), InputError);
  EXPECT_THROW(brute_force_best_subgroup(SavingsHashMap({1.0, 2.0}, {1000.0, 1000.0})),
               DomainError);
}

TEST(BruteForce, OptimumIsAFullCountPrefix) {
  std::mt19937_64 gen(139);
  std::uniform_int_distribution<int> groups(1, 6);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_real_distribution<double> log_amount(0.0, std::log(100.0));
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> amounts(groups(gen));
    for (double& a : amounts) a = std::exp(log_amount(gen));
    std::sort(amounts.begin(), amounts.end());
    amounts.erase(std::unique(amounts.begin(), amounts.end()), amounts.end());
    std::vector<double> counts(amounts.size());
    for (double& c : counts) c = count(gen);
    const SavingsHashMap map(amounts, counts);
    const auto brute = brute_force_best_subgroup(map, 2);
    const auto scan = best_prefix(map);
    EXPECT_NEAR(brute.nu_max, scan.nu_max, 1e-12 * scan.nu_max);
    std::size_t j = 0;
    while (j < counts.size() && brute.counts[j] == static_cast<std::size_t>(counts[j])) ++j;
    bool prefix_shape = true;
    for (std::size_t i = j; i < counts.size(); ++i) prefix_shape &= brute.counts[i] == 0;
    EXPECT_TRUE(prefix_shape) << "trial " << trial;
  }
}

TEST(BruteForce, WorkerCountDoesNotMatter) {
  const SavingsHashMap map({1.0, 2.5, 7.0, 30.0}, {5.0, 6.0, 3.0, 2.0});
  const auto a = brute_force_best_subgroup(map, 1);
  const auto b = brute_force_best_subgroup(map, 5);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.nu_max, b.nu_max);
}

TEST(CapExtension, StaysBeneficial) {
  EXPECT_TRUE(cap_extension_is_beneficial(SavingsVector::homogeneous(7, 2.0), 13));
  EXPECT_TRUE(cap_extension_is_beneficial(SavingsVector::two_group(5, 1.0, 5, 2.0), 100));
  EXPECT_THROW(cap_extension_is_beneficial(SavingsVector::two_group(800, 1.0, 200, 10.0), 1),
               InputError);

  std::mt19937_64 gen(149);
  std::uniform_real_distribution<double> log_amount(0.0, std::log(100.0));
  std::uniform_int_distribution<std::size_t> extra(0, 500);
  int seeds = 0;
  while (seeds < 1000) {
    std::vector<double> s(1 + seeds % 15);
    for (double& x : s) x = std::exp(log_amount(gen));
    SavingsVector roster(s);
    if (!is_beneficial(roster)) {
      // Cut to the best prefix, which is beneficial by construction.
      const auto map = SavingsHashMap::from_savings(roster);
      roster = map.prefix(best_prefix(map).best_groups).expand();
    }
    EXPECT_TRUE(cap_extension_is_beneficial(roster, extra(gen)));
    ++seeds;
  }
}

TEST(CapAdvise, HomogeneousRoster) {
  const auto advice = cap_advise(SavingsVector::homogeneous(50, 3.0), nullptr, StabilityParams{});
  EXPECT_EQ(advice.recommended_cap, 3.0);
  EXPECT_EQ(advice.window, (std::vector<std::size_t>{1}));
  EXPECT_EQ(advice.nu_whole, 50.0);
  EXPECT_FALSE(advice.horizon_best.has_value());
}

TEST(CapAdvise, TwoGroupRecommendsThePoorCap) {
  const auto table = load_life_table(std::string(POOLFUND_DATA_DIR) + "/gompertz_stand_in_70.csv",
                                     70, 0.0);
  const auto savings = SavingsVector::two_group(800, 1.0, 200, 10.0);
  const auto advice = cap_advise(savings, &table, StabilityParams{});
  EXPECT_EQ(advice.recommended_cap, 1.0);
  EXPECT_EQ(advice.scan.best_groups, 1u);
  EXPECT_EQ(advice.nu_capped_contributions, 1000.0);
  EXPECT_EQ(advice.cap_low, 1.0);
  EXPECT_EQ(advice.cap_high, 1.0);
  EXPECT_EQ(advice.members_high, 800.0);
  ASSERT_TRUE(advice.horizon_best.has_value());
  EXPECT_GT(advice.horizon_best->years, advice.horizon_whole->years);
  EXPECT_DOUBLE_EQ(advice.horizon_best->years, table.f_inverse(advice.horizon_best->u));
  EXPECT_THROW(cap_advise(savings, nullptr, StabilityParams{}, 1.0), InputError);
}

TEST(CapAdvise, WindowHoldsEveryPrefixWithinSlack) {
  std::mt19937_64 gen(151);
  std::lognormal_distribution<double> amount(std::log(100.0), 0.8);
  std::vector<double> s(400);
  for (double& x : s) x = std::round(amount(gen));
  const SavingsVector savings(s);
  for (double slack : {0.0, 0.03, 0.2}) {
    const auto advice = cap_advise(savings, nullptr, StabilityParams{}, slack);
    const double floor = advice.scan.nu_max * (1.0 - slack);
    for (std::size_t i = 0; i < advice.scan.prefix_nu.size(); ++i) {
      const bool inside =
          std::find(advice.window.begin(), advice.window.end(), i + 1) != advice.window.end();
      EXPECT_EQ(inside, advice.scan.prefix_nu[i] >= floor * (1.0 - kNuTieTolerance)) << i;
    }
    EXPECT_LE(advice.cap_low, advice.recommended_cap);
    EXPECT_GE(advice.cap_high, advice.recommended_cap);
    EXPECT_GE(advice.nu_capped_contributions, advice.scan.nu_max);
  }
}
