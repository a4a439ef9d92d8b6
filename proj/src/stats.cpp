#include "crossrsa/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "crossrsa/error.hpp"

namespace crossrsa {
namespace {

void require_paired(std::span<const double> x, std::span<const double> y, const char* what) {
  if (x.size() != y.size()) {
    throw ConfigError(std::string(what) + ": length mismatch (" + std::to_string(x.size()) + " vs " +
                      std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) {
    throw ConfigError(std::string(what) + ": need at least 2 values, got " + std::to_string(x.size()));
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(x.begin(), x.end(), finite) || !std::all_of(y.begin(), y.end(), finite)) {
    throw DataError(std::string(what) + ": non-finite value in input");
  }
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

}  // namespace

bool negligible_spread(double sum_squares, std::span<const double> values) {
  const double scale = kRelativeSpreadFloor * max_abs(values);
  return sum_squares <= static_cast<double>(values.size()) * scale * scale;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold equal values; 1-based ranks i+1..j
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "pearson");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (negligible_spread(sxx, x) || negligible_spread(syy, y)) {
    throw DegenerateInputError("pearson: zero variance input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "spearman");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  try {
    return pearson(rx, ry);
  } catch (const DegenerateInputError&) {
    throw DegenerateInputError("spearman: all-tied input (zero variance after ranking)");
  }
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "kendall_tau");
  const std::size_t n = x.size();
  long long concordant_minus_discordant = 0;
  long long untied_x = 0, untied_y = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int sx = sign(x[i] - x[j]);
      const int sy = sign(y[i] - y[j]);
      concordant_minus_discordant += sx * sy;
      untied_x += sx != 0;
      untied_y += sy != 0;
    }
  }
  if (untied_x == 0 || untied_y == 0) {
    throw DegenerateInputError("kendall_tau: all-tied input");
  }
  const double tau = static_cast<double>(concordant_minus_discordant) /
                     std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
  return std::clamp(tau, -1.0, 1.0);
}

PermutationTestResult exact_permutation_test(std::span<const double> x, std::span<const double> y,
                                             Sidedness sidedness) {
  require_paired(x, y, "exact_permutation_test");
  const std::size_t n = x.size();
  if (n > kMaxExactPermutationLength) {
    throw ConfigError("exact_permutation_test: n = " + std::to_string(n) + " exceeds the exhaustive limit of " +
                      std::to_string(kMaxExactPermutationLength));
  }

  PermutationTestResult result;
  result.sidedness = sidedness;
  result.tau = kendall_tau(x, y);

  // Permute positions rather than values so tied y still yields all n! orderings.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> permuted(n);
  const double abs_obs = std::abs(result.tau);
  do {
    for (std::size_t i = 0; i < n; ++i) permuted[i] = y[order[i]];
    const double tau = kendall_tau(x, permuted);
    ++result.n_permutations;
    if (std::abs(tau) >= abs_obs - kPermutationTolerance) ++result.n_extreme_two_sided;
    if (tau >= result.tau - kPermutationTolerance) ++result.n_extreme_one_sided;
  } while (std::next_permutation(order.begin(), order.end()));

  const auto total = static_cast<double>(result.n_permutations);
  result.p_two_sided = static_cast<double>(result.n_extreme_two_sided) / total;
  result.p_one_sided = static_cast<double>(result.n_extreme_one_sided) / total;
  return result;
}

double spearman_brown(double r) {
  if (!std::isfinite(r) || r < -1.0 || r > 1.0) {
    throw ConfigError("spearman_brown: r must lie in [-1, 1], got " + std::to_string(r));
  }
  if (r == -1.0) {
    throw NumericError("spearman_brown: singular at r = -1");
  }
  return 2.0 * r / (1.0 + r);
}

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ConfigError("percentile_sorted: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("percentile_sorted: q outside [0, 1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ConfigError("mean: empty input");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

}  // namespace crossrsa
