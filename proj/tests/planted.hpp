#pragma once

// Synthetic data with known population-level properties, shared by the unit
// tests and the acceptance binary. Everything here is computed independently
// of the library's resampling code (only the RNG and data structs are reused).

#include <cmath>
#include <string>
#include <vector>

#include "crossrsa/neuro.hpp"
#include "crossrsa/rdm.hpp"
#include "crossrsa/rng.hpp"
#include "oracle.hpp"

namespace planted {

inline std::vector<std::string> ids(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// m x d standard-normal latent stimulus factors.
inline std::vector<std::vector<double>> latent(std::size_t m, std::size_t d, std::uint64_t seed) {
  crossrsa::Rng rng(seed, 7);
  std::vector<std::vector<double>> z(m, std::vector<double>(d));
  for (auto& row : z)
    for (auto& v : row) v = rng.normal();
  return z;
}

/// Neurons are random linear readouts of the latent factors plus noise of sd `sigma`.
inline std::vector<std::vector<double>> population(const std::vector<std::vector<double>>& z, std::size_t n,
                                                   double sigma, crossrsa::Rng& rng) {
  const std::size_t m = z.size(), d = z[0].size();
  std::vector<std::vector<double>> out(m, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> w(d);
    for (auto& v : w) v = rng.normal();
    for (std::size_t s = 0; s < m; ++s) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += z[s][c] * w[c];
      out[s][j] = acc + sigma * rng.normal();
    }
  }
  return out;
}

/// Expected Spearman correlation between the RDMs of two independent
/// half-populations of `half` neurons each, averaged over `draws`.
inline double half_reliability(const std::vector<std::vector<double>>& z, std::size_t half, double sigma,
                               std::size_t draws, std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t t = 0; t < draws; ++t) {
    crossrsa::Rng rng(seed, 1000 + t);
    const auto a = oracle::upper(oracle::rdm(population(z, half, sigma, rng)));
    const auto b = oracle::upper(oracle::rdm(population(z, half, sigma, rng)));
    total += oracle::spearman(a, b);
  }
  return total / static_cast<double>(draws);
}

/// Noise sd whose half-population reliability equals `target` (bisection on a
/// monotone decreasing curve).
inline double sigma_for_reliability(const std::vector<std::vector<double>>& z, std::size_t half, double target,
                                    std::size_t draws, std::uint64_t seed) {
  double lo = 0.0, hi = 64.0;
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (half_reliability(z, half, mid, draws, seed) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline crossrsa::NeuralDataset to_dataset(const std::vector<std::vector<double>>& responses) {
  const std::size_t m = responses.size(), n = responses[0].size();
  auto data = crossrsa::NeuralDataset::empty(crossrsa::Species::synthetic, "IT", ids("s", m), ids("n", n), 1);
  for (std::size_t s = 0; s < m; ++s)
    for (std::size_t j = 0; j < n; ++j) data.at(s, j, 0) = responses[s][j];
  return data;
}

inline crossrsa::FeatureMatrix to_features(const std::vector<std::vector<double>>& rows) {
  crossrsa::FeatureMatrix fm;
  fm.stimulus_ids = ids("s", rows.size());
  fm.features = crossrsa::Matrix(rows.size(), rows[0].size());
  for (std::size_t s = 0; s < rows.size(); ++s)
    for (std::size_t j = 0; j < rows[s].size(); ++j) fm.features(s, j) = rows[s][j];
  return fm;
}

}  // namespace planted
