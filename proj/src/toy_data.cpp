#include "crossrsa/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "crossrsa/error.hpp"
#include "crossrsa/rng.hpp"

namespace crossrsa {

ImageDataset make_toy_images(std::size_t n, std::size_t size, std::size_t n_classes, std::uint64_t seed,
                             double noise) {
  if (n == 0 || size == 0 || n_classes < 2) throw ConfigError("make_toy_images: need images, a size and >= 2 classes");
  ImageDataset data;
  data.n_classes = n_classes;
  data.images = Tensor::zeros({n, 3, size, size});
  const double freq = 2.0 * std::numbers::pi / 6.0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, i);
    const std::size_t label = i % n_classes;
    const double angle = std::numbers::pi * static_cast<double>(label) / static_cast<double>(n_classes);
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    const double c = std::cos(angle), s = std::sin(angle);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double tint = ch == label % 3 ? 0.15 : 0.0;
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          const double g = 0.5 + 0.3 * std::sin(freq * (c * static_cast<double>(x) + s * static_cast<double>(y)) + phase);
          const double v = g + tint + noise * rng.normal();
          data.images.data[((i * 3 + ch) * size + y) * size + x] = std::clamp(v, 0.0, 1.0);
        }
      }
    }
    data.labels.push_back(static_cast<int>(label));
  }
  return data;
}

StimulusSet make_toy_stimuli(std::size_t n, std::size_t size, std::uint64_t seed) {
  if (n == 0 || size == 0) throw ConfigError("make_toy_stimuli: need at least one stimulus of positive size");
  StimulusSet set;
  set.domain = StimulusDomain::other;
  const double scale = static_cast<double>(size);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, i);
    Image img = Image::filled(size, size, 0.5);
    for (int k = 0; k < 3; ++k) {
      const double angle = std::numbers::pi * rng.uniform();
      const double freq = 2.0 * std::numbers::pi * (1.0 + 4.0 * rng.uniform()) / scale;
      const double phase = 2.0 * std::numbers::pi * rng.uniform();
      double amp[3];
      for (double& a : amp) a = 0.15 * rng.normal();
      const double cx = scale * rng.uniform(), cy = scale * rng.uniform(), r = scale * (0.1 + 0.2 * rng.uniform());
      double blob[3];
      for (double& b : blob) b = 0.3 * rng.normal();
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          const double fx = static_cast<double>(x), fy = static_cast<double>(y);
          const double g = std::sin(freq * (std::cos(angle) * fx + std::sin(angle) * fy) + phase);
          const double d2 = ((fx - cx) * (fx - cx) + (fy - cy) * (fy - cy)) / (r * r);
          const double e = std::exp(-0.5 * d2);
          for (std::size_t ch = 0; ch < 3; ++ch) img.at(ch, y, x) += amp[ch] * g + blob[ch] * e;
        }
      }
    }
    for (auto& v : img.data) v = std::clamp(v, 0.0, 1.0);
    set.images.push_back(std::move(img));
    set.stimulus_ids.push_back("stim" + std::to_string(i));
  }
  return set;
}

}  // namespace crossrsa
