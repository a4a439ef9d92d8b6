#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "crossrsa/network.hpp"
#include "crossrsa/stdp.hpp"

namespace crossrsa {

/// Labelled images [N, C, H, W] with raw values in [0, 1].
struct ImageDataset {
  Tensor images;
  std::vector<int> labels;
  std::size_t n_classes = 10;

  std::size_t size() const { return labels.size(); }
};

/// CIFAR-10 binary batches: records of 1 label byte + 3072 bytes (R, G, B
/// planes of 32x32). `limit` = 0 reads everything.
ImageDataset load_cifar_binary(const std::vector<std::filesystem::path>& files, std::size_t limit = 0);
void save_cifar_binary(const ImageDataset& data, const std::filesystem::path& path);

/// <root>/<class>/*.png, classes in lexicographic order, files sorted by name.
/// Images are resized to `size` when they differ.
ImageDataset load_png_directory(const std::filesystem::path& root, std::size_t size = 32);

/// Dispatches on the path: a directory is a PNG tree, anything else CIFAR binary.
ImageDataset load_image_dataset(const std::vector<std::filesystem::path>& paths, std::size_t limit = 0);

/// Per-channel mean and population std over all pixels.
Normalization compute_normalization(const Tensor& images);
Tensor standardize(const Tensor& images, const Normalization& norm);

struct TrainingConfig {
  LearningRule rule = LearningRule::bp;
  std::size_t epochs = 40;
  double learning_rate = 0.01;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  NetworkSpec spec = NetworkSpec::standard();
  std::uint64_t fa_feedback_seed = 1;
  PredictiveCodingParams pc;
  StdpParams stdp;
  std::size_t stdp_epochs = 1;  // unsupervised passes per conv layer
  bool keep_fc1 = true;         // false reproduces a conv-only STDP checkpoint

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean over batches, measured before each update
  double accuracy = 0.0;
};

struct TrainingResult {
  Checkpoint checkpoint;
  std::vector<EpochMetrics> history;
};

/// Called after every mini-batch update with the network before the update
/// and the applied descent direction (FA/BP/PC; STDP readout included).
struct BatchEvent {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  const Checkpoint* before = nullptr;
  const Batch* data = nullptr;
  const Gradients* update = nullptr;  // descent direction, added as lr * update
};
using BatchObserver = std::function<void(const BatchEvent&)>;

/// Mini-batch SGD (no momentum) in a fixed per-epoch shuffle drawn from the
/// seed. Normalisation is computed from `data` and stored in the checkpoint.
/// Random rule or epochs = 0 returns init_network(seed) with the normalisation.
TrainingResult train(const TrainingConfig& config, const ImageDataset& data, const BatchObserver& observer = {});

}  // namespace crossrsa
