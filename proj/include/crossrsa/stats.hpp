#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace crossrsa {

/// Comparison tolerance applied to tau values when counting permutations at
/// least as extreme as the observed one.
inline constexpr double kPermutationTolerance = 1e-12;

/// Largest input length accepted by the exhaustive permutation test (8! = 40320).
inline constexpr std::size_t kMaxExactPermutationLength = 8;

enum class Sidedness { one, two };

struct PermutationTestResult {
  double tau = 0.0;
  double p_two_sided = 1.0;
  double p_one_sided = 1.0;
  std::uint64_t n_permutations = 0;
  std::uint64_t n_extreme_two_sided = 0;
  std::uint64_t n_extreme_one_sided = 0;
  Sidedness sidedness = Sidedness::two;

  /// The p-value for the requested sidedness.
  double p() const { return sidedness == Sidedness::two ? p_two_sided : p_one_sided; }
};

/// Ranks starting at 1; tied values receive the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Two-pass Pearson correlation. Throws DegenerateInputError on zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman rho: Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b (equals tau-a when there are no ties).
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// Exact permutation test for Kendall tau over all n! orderings of `y`.
/// The observed ordering is one of the enumerated permutations, so p > 0.
PermutationTestResult exact_permutation_test(std::span<const double> x, std::span<const double> y,
                                             Sidedness sidedness = Sidedness::two);

/// Spearman-Brown prophecy for doubling test length: 2r / (1 + r).
double spearman_brown(double r);

/// Linear-interpolation percentile (Hyndman-Fan type 7) of already-sorted data, q in [0, 1].
double percentile_sorted(std::span<const double> sorted, double q);

/// Relative floor below which a centred sum of squares counts as zero
/// (rounding residue of a constant vector, not real spread).
inline constexpr double kRelativeSpreadFloor = 1e-13;

/// True when `sum_squares` (centred) is rounding noise relative to the
/// magnitude of `values`.
bool negligible_spread(double sum_squares, std::span<const double> values);

double mean(std::span<const double> values);

/// Population standard deviation (divides by n).
double population_std(std::span<const double> values);

}  // namespace crossrsa
