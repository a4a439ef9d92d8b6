#include "crossrsa/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "crossrsa/error.hpp"
#include "crossrsa/rng.hpp"
#include "crossrsa/stats.hpp"

namespace crossrsa {
namespace {

void check_bootstrap_input(const Rdm& model, const Rdm& neural, const BootstrapOptions& options) {
  require_same_stimuli(model.stimulus_ids, neural.stimulus_ids);
  model.validate();
  neural.validate();
  if (model.size() < 4) throw ConfigError("bootstrap_rsa: need at least 4 stimuli, got " + std::to_string(model.size()));
  if (options.n_resamples < 1) throw ConfigError("bootstrap_rsa: n_resamples must be >= 1");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw ConfigError("bootstrap_rsa: alpha must lie in (0, 1)");
}

std::size_t count_distinct(std::vector<std::size_t> draw) {
  std::sort(draw.begin(), draw.end());
  return static_cast<std::size_t>(std::unique(draw.begin(), draw.end()) - draw.begin());
}

/// Draws stimulus indices for one resample until the resampled triangles are
/// usable, then returns rho. Redraws are added to `redraws`.
template <typename Gather>
double resample_rho(std::size_t m, std::uint64_t seed, std::size_t index, std::size_t& redraws, Gather&& gather) {
  Rng rng(seed, index);
  std::vector<std::size_t> draw(m);
  for (std::size_t attempt = 0; attempt <= kMaxRedrawsPerResample; ++attempt) {
    for (auto& d : draw) d = static_cast<std::size_t>(rng.below(m));
    if (count_distinct(draw) >= 3) {
      try {
        return gather(draw);
      } catch (const DegenerateInputError&) {
      }
    }
    ++redraws;
  }
  throw NumericError("bootstrap_rsa: resample " + std::to_string(index) + " exceeded " +
                     std::to_string(kMaxRedrawsPerResample) + " redraws");
}

double gather_pairs(const Rdm& model, const Rdm& neural, const std::vector<std::size_t>& draw) {
  const std::size_t m = draw.size();
  std::vector<double> a, b;
  a.reserve(m * (m - 1) / 2);
  b.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    const auto si = draw[i];
    for (std::size_t j = i + 1; j < m; ++j) {
      const auto sj = draw[j];
      if (si == sj) continue;
      a.push_back(model.matrix(si, sj));
      b.push_back(neural.matrix(si, sj));
    }
  }
  return spearman(a, b);
}

BootstrapCI summarize(std::vector<double> rhos, double point, const BootstrapOptions& options, std::size_t redraws) {
  std::sort(rhos.begin(), rhos.end());
  BootstrapCI ci;
  ci.point = point;
  ci.lower = percentile_sorted(rhos, options.alpha / 2.0);
  ci.upper = percentile_sorted(rhos, 1.0 - options.alpha / 2.0);
  ci.n_resamples = options.n_resamples;
  ci.seed = options.seed;
  ci.alpha = options.alpha;
  ci.n_redraws = redraws;
  return ci;
}

void check_ceiling_input(const NeuralDataset& data, const SplitHalfOptions& options) {
  data.validate();
  if (data.n_neurons() < 4) throw ConfigError("split_half_ceiling: need at least 4 neurons, got " + std::to_string(data.n_neurons()));
  if (data.n_stimuli() < 4) throw ConfigError("split_half_ceiling: need at least 4 stimuli, got " + std::to_string(data.n_stimuli()));
  if (options.n_splits < 1) throw ConfigError("split_half_ceiling: n_splits must be >= 1");
}

using RdmKernel = Rdm (*)(const FeatureMatrix&, DistanceMetric);

std::optional<double> one_split(const FeatureMatrix& averaged, const SplitHalfOptions& options, std::size_t index,
                                RdmKernel kernel, std::string& warning) {
  const auto [half_a, half_b] = split_neurons(averaged.n_features(), options.seed, index);
  try {
    const Rdm a = kernel(select_columns(averaged, half_a), options.metric);
    const Rdm b = kernel(select_columns(averaged, half_b), options.metric);
    return spearman_brown(spearman(upper_triangle(a), upper_triangle(b)));
  } catch (const NumericError& e) {
    warning = "split " + std::to_string(index) + " skipped: " + e.what();
    return std::nullopt;
  }
}

NoiseCeiling finish_ceiling(const std::vector<std::optional<double>>& values, std::vector<std::string> warnings,
                            const SplitHalfOptions& options) {
  std::vector<double> used;
  for (const auto& v : values) {
    if (v) used.push_back(*v);
  }
  if (used.empty()) throw NumericError("split_half_ceiling: every split was degenerate");
  NoiseCeiling nc;
  nc.mean_corrected = mean(used);
  nc.std_corrected = population_std(used);
  nc.n_splits = options.n_splits;
  nc.n_used = used.size();
  nc.seed = options.seed;
  for (auto& w : warnings) {
    if (!w.empty()) nc.warnings.push_back(std::move(w));
  }
  return nc;
}

}  // namespace

std::vector<double> bootstrap_distribution(const Rdm& model, const Rdm& neural, const BootstrapOptions& options,
                                           std::size_t* n_redraws) {
  check_bootstrap_input(model, neural, options);
  const std::size_t m = model.size();
  const auto n = static_cast<std::ptrdiff_t>(options.n_resamples);
  std::vector<double> rhos(options.n_resamples);
  std::vector<std::size_t> redraws(options.n_resamples, 0);
  std::optional<NumericError> failure;

#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    try {
      rhos[r] = resample_rho(m, options.seed, static_cast<std::size_t>(r), redraws[r],
                             [&](const std::vector<std::size_t>& draw) { return gather_pairs(model, neural, draw); });
    } catch (const NumericError& e) {
#pragma omp critical(crossrsa_bootstrap_failure)
      if (!failure) failure.emplace(e.what());
    }
  }
  if (failure) throw *failure;
  if (n_redraws) *n_redraws = std::accumulate(redraws.begin(), redraws.end(), std::size_t{0});
  return rhos;
}

BootstrapCI bootstrap_rsa(const Rdm& model, const Rdm& neural, const BootstrapOptions& options) {
  std::size_t redraws = 0;
  auto rhos = bootstrap_distribution(model, neural, options, &redraws);
  return summarize(std::move(rhos), rsa_score(model, neural), options, redraws);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_neurons(std::size_t n_neurons, std::uint64_t seed,
                                                                            std::size_t index) {
  Rng rng(seed, index);
  std::vector<std::size_t> order(n_neurons);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t half = n_neurons / 2;
  std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
  std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(half),
                             order.begin() + static_cast<std::ptrdiff_t>(2 * half));
  if (n_neurons % 2 == 1) (rng.coin() ? a : b).push_back(order.back());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {std::move(a), std::move(b)};
}

NoiseCeiling split_half_ceiling(const NeuralDataset& data, const SplitHalfOptions& options) {
  check_ceiling_input(data, options);
  const FeatureMatrix averaged = average_repetitions(data);
  const auto n = static_cast<std::ptrdiff_t>(options.n_splits);
  std::vector<std::optional<double>> values(options.n_splits);
  std::vector<std::string> warnings(options.n_splits);
  RdmKernel kernel = [](const FeatureMatrix& fm, DistanceMetric metric) { return compute_rdm(fm, metric); };

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    values[i] = one_split(averaged, options, static_cast<std::size_t>(i), kernel, warnings[i]);
  }
  return finish_ceiling(values, std::move(warnings), options);
}

namespace reference {

BootstrapCI bootstrap_rsa(const Rdm& model, const Rdm& neural, const BootstrapOptions& options) {
  check_bootstrap_input(model, neural, options);
  const std::size_t m = model.size();
  std::vector<double> rhos;
  rhos.reserve(options.n_resamples);
  std::size_t redraws = 0;
  for (std::size_t r = 0; r < options.n_resamples; ++r) {
    rhos.push_back(resample_rho(m, options.seed, r, redraws, [&](const std::vector<std::size_t>& draw) {
      // Materialise the resampled matrices, then walk their strict upper
      // triangle skipping cells that pair a stimulus with its own copy.
      Matrix rm(m, m), rn(m, m);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          rm(i, j) = model.matrix(draw[i], draw[j]);
          rn(i, j) = neural.matrix(draw[i], draw[j]);
        }
      }
      std::vector<double> a, b;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
          if (draw[i] == draw[j]) continue;
          a.push_back(rm(i, j));
          b.push_back(rn(i, j));
        }
      }
      return spearman(a, b);
    }));
  }
  return summarize(std::move(rhos), rsa_score(model, neural), options, redraws);
}

NoiseCeiling split_half_ceiling(const NeuralDataset& data, const SplitHalfOptions& options) {
  check_ceiling_input(data, options);
  const FeatureMatrix averaged = average_repetitions(data);
  std::vector<std::optional<double>> values;
  std::vector<std::string> warnings(options.n_splits);
  RdmKernel kernel = [](const FeatureMatrix& fm, DistanceMetric metric) { return reference::compute_rdm(fm, metric); };
  for (std::size_t i = 0; i < options.n_splits; ++i) values.push_back(one_split(averaged, options, i, kernel, warnings[i]));
  return finish_ceiling(values, std::move(warnings), options);
}

}  // namespace reference

}  // namespace crossrsa
