#pragma once

// Small networks and batches for gradient tests. The full-size network is
// too slow for per-parameter finite differences on one core.

#include <cmath>

#include "crossrsa/network.hpp"
#include "crossrsa/rng.hpp"

namespace nets {

/// Conv 8-8-8, FC 16 then `classes` logits, on 8x8 RGB.
inline crossrsa::NetworkSpec toy_spec(std::size_t classes = 3) {
  crossrsa::NetworkSpec spec;
  spec.input_size = 8;
  spec.conv_widths = {8, 8, 8};
  spec.fc_widths = {16, classes};
  return spec;
}

inline crossrsa::Batch random_batch(std::size_t n, const crossrsa::NetworkSpec& spec, std::uint64_t seed) {
  crossrsa::Rng rng(seed, 99);
  crossrsa::Batch b;
  b.images = crossrsa::Tensor::zeros({n, spec.input_channels, spec.input_size, spec.input_size});
  for (auto& v : b.images.data) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(rng.below(spec.n_classes())));
  return b;
}

inline double loss_of(const crossrsa::Checkpoint& ckpt, const crossrsa::Batch& batch) {
  return crossrsa::cross_entropy(crossrsa::forward(ckpt, batch.images).logits, batch.labels).loss;
}

/// Worst relative error between bp_gradient and central differences over
/// `probes` random parameters. Relative error is |g - fd| / max(|g|, |fd|, floor).
inline double worst_fd_error(const crossrsa::Checkpoint& ckpt, const crossrsa::Batch& batch, std::size_t probes,
                             double step, std::uint64_t seed, double floor = 1e-6) {
  const auto grads = crossrsa::bp_gradient(ckpt, batch);
  crossrsa::Rng rng(seed, 5);
  double worst = 0.0;
  for (std::size_t p = 0; p < probes; ++p) {
    const auto l = static_cast<std::size_t>(rng.below(ckpt.layers.size()));
    const bool bias = rng.below(4) == 0;
    auto probe = ckpt;
    auto& t = bias ? probe.layers[l].bias : probe.layers[l].weight;
    const auto i = static_cast<std::size_t>(rng.below(t.size()));
    const double g = (bias ? grads[l].bias : grads[l].weight).data[i];
    const double orig = t.data[i];
    t.data[i] = orig + step;
    const double up = loss_of(probe, batch);
    t.data[i] = orig - step;
    const double down = loss_of(probe, batch);
    const double fd = (up - down) / (2 * step);
    worst = std::max(worst, std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), floor}));
  }
  return worst;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace nets
