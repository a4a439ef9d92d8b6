#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "crossrsa/error.hpp"
#include "crossrsa/rng.hpp"
#include "crossrsa/stats.hpp"
#include "oracle.hpp"

using namespace crossrsa;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST(AverageRanks, TiesShareTheMeanRank) {
  const std::vector<double> x{10, 20, 20, 5, 20};
  EXPECT_EQ(average_ranks(x), (std::vector<double>{2, 4, 4, 1, 4}));
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    auto v = random_vector(rng, 9);
    for (auto& e : v) e = std::round(e * 2);  // force ties
    EXPECT_EQ(average_ranks(v), oracle::ranks(v));
  }
}

TEST(Spearman, MonotoneAndReversed) {
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0);
}

TEST(Spearman, OneAdjacentSwapGivesPointNine) {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{1, 2, 3, 5, 4};
  // closed form 1 - 6 * sum d^2 / (n (n^2 - 1)) with sum d^2 = 2
  EXPECT_NEAR(spearman(x, y), 1.0 - 6.0 * 2.0 / (5.0 * 24.0), 1e-15);
  EXPECT_NEAR(spearman(x, y), oracle::spearman(x, y), 1e-15);
  EXPECT_NEAR(spearman(x, y), 0.9, 1e-15);
}

TEST(Spearman, MatchesRankThenPearsonOracleWithTies) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    auto x = random_vector(rng, 12), y = random_vector(rng, 12);
    for (auto& e : x) e = std::round(e * 3);
    EXPECT_NEAR(spearman(x, y), oracle::spearman(x, y), 1e-12);
  }
}

TEST(Spearman, SymmetricAndInvariantUnderMonotoneTransforms) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto x = random_vector(rng, 10), y = random_vector(rng, 10);
    std::vector<double> fx(x.size());
    std::transform(x.begin(), x.end(), fx.begin(), [](double v) { return std::exp(3 * v) + 7; });
    EXPECT_DOUBLE_EQ(spearman(x, y), spearman(y, x));
    EXPECT_NEAR(spearman(x, y), spearman(fx, y), 1e-14);
    EXPECT_NEAR(kendall_tau(x, y), kendall_tau(fx, y), 1e-14);
    EXPECT_DOUBLE_EQ(kendall_tau(x, y), kendall_tau(y, x));
  }
}

TEST(Spearman, Errors) {
  const std::vector<double> three{1, 2, 3};
  EXPECT_THROW(spearman(three, std::vector<double>{1, 2}), ConfigError);
  EXPECT_THROW(spearman(std::vector<double>{1}, std::vector<double>{2}), ConfigError);
  EXPECT_THROW(spearman(three, std::vector<double>{4, 4, 4}), DegenerateInputError);
  EXPECT_THROW(spearman(three, std::vector<double>{1, NAN, 2}), DataError);
  EXPECT_THROW(spearman(three, std::vector<double>{1, INFINITY, 2}), DataError);
}

TEST(KendallTau, Basics) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(kendall_tau(x, x), 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(x, std::vector<double>{5, 4, 3, 2, 1}), -1.0);
  // one discordant pair of ten
  const std::vector<double> y{2, 1, 3, 4, 5};
  EXPECT_NEAR(kendall_tau(x, y), 1.0 - 2.0 * 1.0 / 10.0, 1e-15);
  EXPECT_NEAR(kendall_tau(x, y), oracle::kendall(x, y), 1e-15);
}

TEST(KendallTau, TauBMatchesPairEnumerationWithTies) {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    auto x = random_vector(rng, 8), y = random_vector(rng, 8);
    for (auto& e : x) e = std::round(e);
    for (auto& e : y) e = std::round(e * 2);
    if (std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end()) continue;
    if (std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end()) continue;
    EXPECT_NEAR(kendall_tau(x, y), oracle::kendall(x, y), 1e-14);
  }
}

TEST(KendallTau, AllTiedIsDegenerate) {
  EXPECT_THROW(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2}), DegenerateInputError);
}

TEST(ExactPermutation, MatchesMahonianEnumerationForAllSmallN) {
  for (int n = 2; n <= 6; ++n) {
    std::vector<double> x(static_cast<std::size_t>(n));
    std::iota(x.begin(), x.end(), 1.0);
    std::vector<double> y = x;
    do {
      const auto r = exact_permutation_test(x, y);
      const auto p = oracle::mahonian_p(n, oracle::inversions(x, y));
      ASSERT_EQ(r.n_permutations, p.total);
      ASSERT_EQ(r.n_extreme_two_sided, p.two_sided_count) << "n=" << n;
      ASSERT_EQ(r.n_extreme_one_sided, p.one_sided_count) << "n=" << n;
      ASSERT_DOUBLE_EQ(r.p_two_sided, static_cast<double>(p.two_sided_count) / static_cast<double>(p.total));
    } while (std::next_permutation(y.begin(), y.end()));
  }
}

TEST(ExactPermutation, MahonianRowForFive) {
  EXPECT_EQ(oracle::mahonian(5), (std::vector<std::uint64_t>{1, 4, 9, 15, 20, 22, 20, 15, 9, 4, 1}));
}

TEST(ExactPermutation, PublishedSizeFiveValues) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  // three inversions: tau = 1 - 4 * 3 / 20 = 0.4; |tau| >= 0.4 covers 1+4+9 on each tail
  const auto t4 = exact_permutation_test(x, std::vector<double>{3, 1, 2, 5, 4});
  EXPECT_NEAR(t4.tau, 0.4, 1e-12);
  EXPECT_EQ(t4.n_extreme_two_sided, 58u);
  EXPECT_NEAR(t4.p_two_sided, 58.0 / 120.0, 1e-15);
  EXPECT_EQ(std::round(t4.p_two_sided * 100) / 100, 0.48);

  // five inversions: tau = 0
  const auto t0 = exact_permutation_test(x, std::vector<double>{3, 1, 5, 4, 2});
  EXPECT_NEAR(t0.tau, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(t0.p_two_sided, 1.0);

  const auto t1 = exact_permutation_test(x, x);
  EXPECT_DOUBLE_EQ(t1.p_one_sided, 1.0 / 120.0);
  EXPECT_NEAR(t1.p_one_sided, 0.0083, 5e-5);
  EXPECT_DOUBLE_EQ(t1.p_two_sided, 2.0 / 120.0);
}

TEST(ExactPermutation, OnlyPerfectOrderingsReachFivePercentAtNFive) {
  std::vector<double> x{1, 2, 3, 4, 5}, y = x;
  do {
    const auto r = exact_permutation_test(x, y);
    if (r.p_two_sided <= 0.05) {
      EXPECT_NEAR(std::abs(r.tau), 1.0, 1e-12);
    }
    if (r.tau >= 0.0) {
      EXPECT_LE(r.p_one_sided, r.p_two_sided + 1e-15);  // upper tail
    }
    EXPECT_GT(r.p_two_sided, 0.0);
    // p values are multiples of 1/120
    EXPECT_NEAR(r.p_two_sided * 120.0, std::round(r.p_two_sided * 120.0), 1e-9);
  } while (std::next_permutation(y.begin(), y.end()));
}

TEST(ExactPermutation, SidednessSelectsReportedP) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(exact_permutation_test(x, x, Sidedness::one).p(), 1.0 / 120.0);
  EXPECT_DOUBLE_EQ(exact_permutation_test(x, x).p(), 2.0 / 120.0);
}

TEST(ExactPermutation, Guards) {
  std::vector<double> nine(9);
  std::iota(nine.begin(), nine.end(), 0.0);
  EXPECT_THROW(exact_permutation_test(nine, nine), ConfigError);
  EXPECT_THROW(exact_permutation_test(std::vector<double>{1, 2, 3}, std::vector<double>{1, 1, 1}),
               DegenerateInputError);
}

TEST(SpearmanBrown, Values) {
  EXPECT_DOUBLE_EQ(spearman_brown(1.0), 1.0);
  EXPECT_DOUBLE_EQ(spearman_brown(0.0), 0.0);
  EXPECT_NEAR(spearman_brown(0.5), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(spearman_brown(-1.0), NumericError);
  EXPECT_THROW(spearman_brown(1.5), ConfigError);
}

TEST(SpearmanBrown, MonotoneAndMapsUnitIntervalOntoItself) {
  double prev = -1e9;
  for (int i = -99; i <= 100; ++i) {
    const double r = i / 100.0;
    const double v = spearman_brown(r);
    EXPECT_GT(v, prev);
    prev = v;
    if (r >= 0) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      EXPECT_GE(v, r);
    }
  }
}

TEST(Percentile, TypeSevenInterpolation) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.25), 1.75);
}

TEST(Moments, PopulationStd) {
  const std::vector<double> v{0.0, 0.2};
  EXPECT_DOUBLE_EQ(mean(v), 0.1);
  EXPECT_DOUBLE_EQ(population_std(v), 0.1);
}
