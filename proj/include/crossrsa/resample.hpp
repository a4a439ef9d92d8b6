#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crossrsa/neuro.hpp"
#include "crossrsa/rdm.hpp"

namespace crossrsa {

inline constexpr std::size_t kDefaultBootstrapResamples = 10000;
inline constexpr std::size_t kDefaultSplitHalfSplits = 100;
inline constexpr double kDefaultAlpha = 0.05;

/// Redraws allowed per resample when a draw has fewer than 3 distinct stimuli
/// or produces an all-tied triangle.
inline constexpr std::size_t kMaxRedrawsPerResample = 1000;

struct BootstrapOptions {
  std::size_t n_resamples = kDefaultBootstrapResamples;
  std::uint64_t seed = 0;
  double alpha = kDefaultAlpha;
};

/// Percentile bootstrap interval around the observed Spearman rho.
struct BootstrapCI {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n_resamples = 0;
  std::uint64_t seed = 0;
  double alpha = kDefaultAlpha;
  std::size_t n_redraws = 0;

  bool operator==(const BootstrapCI&) const = default;
};

/// Stimulus bootstrap: every resample draws m stimulus indices with
/// replacement and indexes rows and columns of both RDMs with the same draw.
/// Pairs formed by a stimulus with its own duplicate are dropped; pairs of
/// distinct stimuli (including duplicated ones) are kept.
///
/// Resample r uses Rng(seed, r), so the result is bit-identical for any
/// thread count and equal to reference::bootstrap_rsa.
BootstrapCI bootstrap_rsa(const Rdm& model, const Rdm& neural, const BootstrapOptions& options = {});

/// The per-resample rho values in resample order (used by tests and benchmarks).
std::vector<double> bootstrap_distribution(const Rdm& model, const Rdm& neural, const BootstrapOptions& options,
                                           std::size_t* n_redraws = nullptr);

struct SplitHalfOptions {
  std::size_t n_splits = kDefaultSplitHalfSplits;
  std::uint64_t seed = 0;
  DistanceMetric metric = DistanceMetric::correlation;
};

struct NoiseCeiling {
  double mean_corrected = 0.0;
  double std_corrected = 0.0;  // population std over used splits
  std::size_t n_splits = 0;    // requested
  std::size_t n_used = 0;      // splits that produced a value
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;  // one per skipped split

  bool operator==(const NoiseCeiling&) const = default;
};

/// Split-half noise ceiling over neurons. Each split shuffles the neurons,
/// assigns halves (an odd extra neuron goes to a random half), computes one
/// RDM per half from repetition-averaged responses, Spearman-correlates the
/// upper triangles and applies the Spearman-Brown correction. The ceiling is
/// the mean (and population std) of the corrected values.
NoiseCeiling split_half_ceiling(const NeuralDataset& data, const SplitHalfOptions& options = {});

/// Neuron partition used by split `index` (exposed for tests).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_neurons(std::size_t n_neurons,
                                                                            std::uint64_t seed,
                                                                            std::size_t index);

namespace reference {

BootstrapCI bootstrap_rsa(const Rdm& model, const Rdm& neural, const BootstrapOptions& options = {});
NoiseCeiling split_half_ceiling(const NeuralDataset& data, const SplitHalfOptions& options = {});

}  // namespace reference

}  // namespace crossrsa
