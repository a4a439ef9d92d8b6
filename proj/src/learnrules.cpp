#include "crossrsa/learnrules.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "crossrsa/error.hpp"
#include "crossrsa/image.hpp"
#include "crossrsa/io.hpp"
#include "crossrsa/rng.hpp"
#include "network_internal.hpp"

namespace crossrsa {

namespace {

constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;
constexpr std::size_t kCifarRecord = 1 + kCifarPixels;

// Stream offsets keep epoch shuffles apart from the per-layer init streams.
constexpr std::uint64_t kShuffleStream = 1u << 20;
constexpr std::uint64_t kStdpShuffleStream = 1u << 21;

}  // namespace

ImageDataset load_cifar_binary(const std::vector<std::filesystem::path>& files, std::size_t limit) {
  if (files.empty()) throw ConfigError("no dataset files given");
  std::vector<double> pixels;
  std::vector<int> labels;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (bytes.empty() || bytes.size() % kCifarRecord != 0) {
      throw DataError(path.string() + ": size " + std::to_string(bytes.size()) + " is not a multiple of the " +
                      std::to_string(kCifarRecord) + "-byte CIFAR record");
    }
    for (std::size_t off = 0; off < bytes.size(); off += kCifarRecord) {
      if (limit != 0 && labels.size() == limit) break;
      const int label = bytes[off];
      if (label > 9) {
        throw DataError(path.string() + ": record " + std::to_string(off / kCifarRecord) + " has label " +
                        std::to_string(label));
      }
      labels.push_back(label);
      for (std::size_t i = 0; i < kCifarPixels; ++i) pixels.push_back(bytes[off + 1 + i] / 255.0);
    }
  }
  ImageDataset data;
  data.images.shape = {labels.size(), 3, kCifarSide, kCifarSide};
  data.images.data = std::move(pixels);
  data.labels = std::move(labels);
  return data;
}

void save_cifar_binary(const ImageDataset& data, const std::filesystem::path& path) {
  const auto& s = data.images.shape;
  if (s.size() != 4 || s[1] != 3 || s[2] != kCifarSide || s[3] != kCifarSide || s[0] != data.labels.size()) {
    throw ConfigError("save_cifar_binary: images must be [N, 3, 32, 32] with one label each");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] < 0 || data.labels[i] > 255) throw ConfigError("save_cifar_binary: label out of byte range");
    out.put(static_cast<char>(data.labels[i]));
    for (std::size_t j = 0; j < kCifarPixels; ++j) {
      const double v = std::clamp(data.images.data[i * kCifarPixels + j], 0.0, 1.0);
      out.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0))));
    }
  }
  if (!out) throw DataError("cannot write " + path.string());
}

ImageDataset load_png_directory(const std::filesystem::path& root, std::size_t size) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DataError("not a directory: " + root.string());
  std::vector<fs::path> classes;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) classes.push_back(entry.path());
  }
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) throw DataError(root.string() + ": no class subdirectories");

  ImageDataset data;
  data.n_classes = classes.size();
  std::vector<double> pixels;
  for (std::size_t label = 0; label < classes.size(); ++label) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(classes[label])) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      Image img = read_png(f);
      if (img.width != size || img.height != size) img = resize_bilinear(img, size, size);
      pixels.insert(pixels.end(), img.data.begin(), img.data.end());
      data.labels.push_back(static_cast<int>(label));
    }
  }
  if (data.labels.empty()) throw DataError(root.string() + ": no PNG images found");
  data.images.shape = {data.labels.size(), 3, size, size};
  data.images.data = std::move(pixels);
  return data;
}

ImageDataset load_image_dataset(const std::vector<std::filesystem::path>& paths, std::size_t limit) {
  if (paths.size() == 1 && std::filesystem::is_directory(paths[0])) {
    ImageDataset data = load_png_directory(paths[0]);
    if (limit != 0 && limit < data.size()) {
      const std::size_t per = data.images.size() / data.size();
      data.labels.resize(limit);
      data.images.data.resize(limit * per);
      data.images.shape[0] = limit;
    }
    return data;
  }
  return load_cifar_binary(paths, limit);
}

Normalization compute_normalization(const Tensor& images) {
  if (images.shape.size() != 4 || images.dim(0) == 0) throw ConfigError("compute_normalization: empty image batch");
  const std::size_t n = images.dim(0), c = images.dim(1), hw = images.dim(2) * images.dim(3);
  Normalization norm;
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = images.data.data() + (i * c + ch) * hw;
      sum += std::accumulate(p, p + hw, 0.0);
    }
    const double mean = sum / static_cast<double>(n * hw);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = images.data.data() + (i * c + ch) * hw;
      for (std::size_t j = 0; j < hw; ++j) ss += (p[j] - mean) * (p[j] - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n * hw));
    norm.mean.push_back(mean);
    norm.std.push_back(sd > 0.0 ? sd : 1.0);
  }
  return norm;
}

Tensor standardize(const Tensor& images, const Normalization& norm) {
  if (images.shape.size() != 4 || norm.mean.size() != images.dim(1) || norm.std.size() != images.dim(1)) {
    throw ConfigError("standardize: normalisation does not match image channels");
  }
  Tensor out = images;
  const std::size_t n = images.dim(0), c = images.dim(1), hw = images.dim(2) * images.dim(3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double* p = out.data.data() + (i * c + ch) * hw;
      for (std::size_t j = 0; j < hw; ++j) p[j] = (p[j] - norm.mean[ch]) / norm.std[ch];
    }
  }
  return out;
}

void TrainingConfig::validate() const {
  spec.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!keep_fc1 && rule != LearningRule::stdp) throw ConfigError("dropping FC1 is only allowed for STDP");
  if (rule == LearningRule::pc && (pc.inference_steps == 0 || !(pc.inference_rate > 0.0))) {
    throw ConfigError("predictive coding needs positive inference steps and rate");
  }
  if (rule == LearningRule::stdp) {
    if (!(stdp.tau_plus > 0.0) || !(stdp.tau_minus > 0.0) || !(stdp.a_plus > 0.0) || !(stdp.a_minus > 0.0) ||
        stdp.time_steps < 2) {
      throw ConfigError("STDP needs positive time constants and amplitudes and at least 2 time steps");
    }
  }
}

namespace {

Tensor gather(const Tensor& src, std::span<const std::size_t> rows) {
  const std::size_t per = src.size() / src.dim(0);
  Tensor out;
  out.shape = src.shape;
  out.shape[0] = rows.size();
  out.data.resize(rows.size() * per);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(src.data.begin() + static_cast<std::ptrdiff_t>(rows[i] * per), per,
                out.data.begin() + static_cast<std::ptrdiff_t>(i * per));
  }
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, stream);
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

void apply(Checkpoint& ckpt, const Gradients& update, double lr, std::size_t epoch, std::size_t batch) {
  bool finite = true;
  for (std::size_t l = 0; l < update.size(); ++l) {
    auto& p = ckpt.layers[l];
    const auto& u = update[l];
    if (u.weight.data.empty()) continue;
    for (std::size_t i = 0; i < p.weight.size(); ++i) finite &= std::isfinite(p.weight.data[i] += lr * u.weight.data[i]);
    for (std::size_t i = 0; i < p.bias.size(); ++i) finite &= std::isfinite(p.bias.data[i] += lr * u.bias.data[i]);
  }
  if (!finite) {
    throw NumericError("training diverged at epoch " + std::to_string(epoch) + " batch " + std::to_string(batch) +
                       " (non-finite weights)");
  }
}

void negate(Gradients& g) {
  for (auto& p : g) {
    for (auto& v : p.weight.data) v = -v;
    for (auto& v : p.bias.data) v = -v;
  }
}

void check_loss(const LossValue& loss, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss.loss)) {
    throw NumericError("training diverged at epoch " + std::to_string(epoch) + " batch " + std::to_string(batch) +
                       " (loss = " + io::format_double(loss.loss) + ")");
  }
}

void check_data(const TrainingConfig& config, const ImageDataset& data) {
  const auto& s = data.images.shape;
  if (s.size() != 4 || s[0] != data.labels.size() || s[0] == 0) {
    throw DataError("training data must be a non-empty [N, C, H, W] batch with one label per image");
  }
  if (s[1] != config.spec.input_channels || s[2] != config.spec.input_size || s[3] != config.spec.input_size) {
    throw DataError("training images are " + std::to_string(s[1]) + "x" + std::to_string(s[2]) + "x" +
                    std::to_string(s[3]) + ", network expects " + std::to_string(config.spec.input_channels) + "x" +
                    std::to_string(config.spec.input_size) + "x" + std::to_string(config.spec.input_size));
  }
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] < 0 || static_cast<std::size_t>(data.labels[i]) >= config.spec.n_classes()) {
      throw DataError("image " + std::to_string(i) + " has label " + std::to_string(data.labels[i]) +
                      " outside the network's " + std::to_string(config.spec.n_classes()) + " classes");
    }
  }
}

// Supervised epochs for BP, FA and PC.
void train_supervised(const TrainingConfig& config, const Tensor& images, const std::vector<int>& labels,
                      TrainingResult& result, const BatchObserver& observer) {
  auto& ckpt = result.checkpoint;
  std::vector<Tensor> feedback;
  if (config.rule == LearningRule::fa) feedback = make_feedback_weights(ckpt, config.fa_feedback_seed);
  const std::size_t n = labels.size();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = epoch_order(n, config.seed, kShuffleStream + epoch);
    EpochMetrics m{epoch, 0.0, 0.0};
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batches) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(config.batch_size, n - start));
      Batch batch{gather(images, rows), {}};
      for (auto r : rows) batch.labels.push_back(labels[r]);
      LossValue loss;
      Gradients update;
      if (config.rule == LearningRule::pc) {
        update = predictive_coding_update(ckpt, batch, config.pc, &loss);
      } else {
        update = feedback_gradient(ckpt, feedback, batch, &loss);
        negate(update);
      }
      check_loss(loss, epoch, batches);
      m.loss += loss.loss;
      m.accuracy += loss.accuracy;
      if (observer) observer({epoch, batches, &ckpt, &batch, &update});
      apply(ckpt, update, config.learning_rate, epoch, batches);
    }
    m.loss /= static_cast<double>(batches);
    m.accuracy /= static_cast<double>(batches);
    result.history.push_back(m);
  }
}

Tensor forward_until(const Checkpoint& ckpt, const Tensor& images, std::size_t layers) {
  Tensor x = images;
  for (std::size_t l = 0; l < layers; ++l) x = detail::layer_forward(ckpt, l, x, nullptr);
  return x;
}

// Greedy unsupervised conv layers, then a supervised readout of the FC stack
// on frozen conv features.
void train_stdp(const TrainingConfig& config, const Tensor& images, const std::vector<int>& labels,
                TrainingResult& result, const BatchObserver& observer) {
  auto& ckpt = result.checkpoint;
  const auto& spec = ckpt.spec;
  const std::size_t n = labels.size();
  for (std::size_t l = 0; l < spec.n_conv(); ++l) {
    for (std::size_t pass = 0; pass < config.stdp_epochs; ++pass) {
      const auto order = epoch_order(n, config.seed, kStdpShuffleStream + l * 1024 + pass);
      for (std::size_t start = 0; start < n; start += config.batch_size) {
        const std::span<const std::size_t> rows(order.data() + start, std::min(config.batch_size, n - start));
        const Tensor input = forward_until(ckpt, gather(images, rows), l);
        stdp_conv_update(ckpt, l, input, config.stdp);
      }
    }
  }

  Tensor features;
  for (std::size_t start = 0; start < n; start += config.batch_size) {
    std::vector<std::size_t> rows(std::min(config.batch_size, n - start));
    std::iota(rows.begin(), rows.end(), start);
    const Tensor f = forward_until(ckpt, gather(images, rows), spec.n_conv());
    if (features.shape.empty()) features.shape = f.shape, features.shape[0] = 0;
    features.data.insert(features.data.end(), f.data.begin(), f.data.end());
    features.shape[0] += f.dim(0);
  }

  const std::size_t fc1 = spec.fc1_index();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = epoch_order(n, config.seed, kShuffleStream + epoch);
    EpochMetrics m{epoch, 0.0, 0.0};
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batches) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(config.batch_size, n - start));
      Batch batch{gather(features, rows), {}};
      for (auto r : rows) batch.labels.push_back(labels[r]);
      std::vector<detail::LayerCache> caches(spec.n_layers());
      Tensor x = batch.images;
      for (std::size_t l = fc1; l < spec.n_layers(); ++l) x = detail::layer_forward(ckpt, l, x, &caches[l]);
      const LossValue loss = cross_entropy(x, batch.labels);
      check_loss(loss, epoch, batches);
      Gradients update = detail::backward_all(ckpt, caches, detail::cross_entropy_grad(x, batch.labels), {}, fc1);
      negate(update);
      m.loss += loss.loss;
      m.accuracy += loss.accuracy;
      if (observer) observer({epoch, batches, &ckpt, &batch, &update});
      apply(ckpt, update, config.learning_rate, epoch, batches);
    }
    m.loss /= static_cast<double>(batches);
    m.accuracy /= static_cast<double>(batches);
    result.history.push_back(m);
  }
}

}  // namespace

TrainingResult train(const TrainingConfig& config, const ImageDataset& data, const BatchObserver& observer) {
  config.validate();
  check_data(config, data);
  TrainingResult result;
  result.checkpoint = init_network(config.seed, config.spec);
  auto& ckpt = result.checkpoint;
  ckpt.rule = config.rule;
  ckpt.normalization = compute_normalization(data.images);
  if (config.rule == LearningRule::random || config.epochs == 0) return result;

  const Tensor images = standardize(data.images, ckpt.normalization);
  if (config.rule == LearningRule::stdp) {
    train_stdp(config, images, data.labels, result, observer);
  } else {
    train_supervised(config, images, data.labels, result, observer);
  }
  ckpt.epochs_trained = config.epochs;
  if (!config.keep_fc1) {
    ckpt.has_fc1 = false;
    ckpt.layers[ckpt.spec.fc1_index()] = {};
  }
  ckpt.validate();
  return result;
}

}  // namespace crossrsa
