#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crossrsa {

enum class LearningRule { bp, fa, pc, stdp, random };

/// Canonical labels: BP, FA, PC, STDP, Random.
std::string_view to_string(LearningRule rule);
/// Accepts canonical labels and lower-case CLI spellings (bp, fa, pc, stdp, random).
LearningRule parse_learning_rule(std::string_view text);
inline constexpr LearningRule kAllRules[] = {LearningRule::bp, LearningRule::fa, LearningRule::pc, LearningRule::stdp,
                                             LearningRule::random};

enum class Activation { relu, identity };

/// Conv stack (3x3 kernels, stride 1, padding 1, activation, 2x2 max-pool)
/// followed by fully connected layers. The last FC layer produces logits and
/// has no activation. Layer names are Conv1..ConvN then FC1..FCM.
struct NetworkSpec {
  std::size_t input_channels = 3;
  std::size_t input_size = 32;  // training-time spatial size (square)
  std::vector<std::size_t> conv_widths{32, 64, 128};
  std::vector<std::size_t> fc_widths{512, 10};
  Activation activation = Activation::relu;

  /// Conv1: 32, Conv2: 64, Conv3: 128, FC1: 512, FC2: 10 on 32x32 RGB.
  static NetworkSpec standard() { return {}; }

  std::size_t n_conv() const { return conv_widths.size(); }
  std::size_t n_layers() const { return conv_widths.size() + fc_widths.size(); }
  bool is_conv(std::size_t layer) const { return layer < n_conv(); }
  std::string layer_name(std::size_t layer) const;
  std::size_t layer_index(std::string_view name) const;  // throws ConfigError
  std::size_t fc1_index() const { return n_conv(); }

  /// Spatial size of the last conv output at training resolution.
  std::size_t grid() const { return input_size >> n_conv(); }
  std::size_t flat_features() const;
  std::size_t n_classes() const { return fc_widths.back(); }

  void validate() const;
  bool operator==(const NetworkSpec&) const = default;
};

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  static Tensor zeros(std::vector<std::size_t> shape);
  std::size_t size() const { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  bool operator==(const Tensor&) const = default;
};

struct LayerParams {
  Tensor weight;  // conv: [out, in, 3, 3]; fc: [out, in]
  Tensor bias;    // [out]
  bool operator==(const LayerParams&) const = default;
};

/// Per-channel input standardisation stored with the weights.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> std;
  bool operator==(const Normalization&) const = default;
};

inline constexpr std::string_view kCheckpointFormat = "crossrsa-ckpt/1";

struct Checkpoint {
  NetworkSpec spec;
  std::vector<LayerParams> layers;  // empty weight/bias tensors for FC1 when !has_fc1
  LearningRule rule = LearningRule::random;
  std::uint64_t seed = 0;
  std::size_t epochs_trained = 0;
  bool has_fc1 = true;
  Normalization normalization;

  void validate() const;
  bool operator==(const Checkpoint&) const = default;
};

/// Kaiming fan-in normal weights (std = sqrt(2 / fan_in)), zero biases,
/// identity normalisation. Layer i draws from Rng(seed, i).
Checkpoint init_network(std::uint64_t seed, const NetworkSpec& spec = NetworkSpec::standard());

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Images [N, C, H, W] (already standardised) with integer class labels.
struct Batch {
  Tensor images;
  std::vector<int> labels;
};

struct ForwardResult {
  Tensor logits;                          // [N, classes]; empty when stopped early
  std::map<std::string, Tensor> activations;  // block outputs of all non-final layers reached
};

/// Runs the network on standardised images. Spatial sizes other than
/// spec.input_size are accepted when divisible by 2^n_conv; the last conv map
/// is then adaptively average-pooled to spec.grid() before FC1.
/// `stop_after` ends the pass after the named layer.
ForwardResult forward(const Checkpoint& ckpt, const Tensor& images, std::optional<std::string> stop_after = {});

/// Per-layer parameter gradients, same shapes as Checkpoint::layers.
using Gradients = std::vector<LayerParams>;

/// Mean softmax cross-entropy and accuracy of the logits.
struct LossValue {
  double loss = 0.0;
  double accuracy = 0.0;
};
LossValue cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Exact reverse-mode gradients of the mean cross-entropy loss.
Gradients bp_gradient(const Checkpoint& ckpt, const Batch& batch, LossValue* loss = nullptr);

/// Feedback-alignment pseudo-gradient: identical to bp_gradient except error
/// is carried to lower layers through `feedback[l]` instead of layer l's
/// forward weights. feedback[l] must have layer l's weight shape (entry 0 is unused).
Gradients feedback_gradient(const Checkpoint& ckpt, std::span<const Tensor> feedback, const Batch& batch,
                            LossValue* loss = nullptr);

/// Fixed random feedback weights for FA, Kaiming-scaled, one per layer.
std::vector<Tensor> make_feedback_weights(const Checkpoint& ckpt, std::uint64_t seed);

struct PredictiveCodingParams {
  std::size_t inference_steps = 20;
  double inference_rate = 0.1;
};

/// Predictive-coding weight updates (the descent direction, comparable to
/// -bp_gradient). Input is clamped, the output error is the cross-entropy
/// error at the prediction, and hidden latents relax for `inference_steps`
/// steps on the sum of squared layerwise prediction errors. Updates are local:
/// each layer combines its own equilibrium error with its own input latent.
Gradients predictive_coding_update(const Checkpoint& ckpt, const Batch& batch, const PredictiveCodingParams& params,
                                   LossValue* loss = nullptr);

// --- layer-level kernels (exposed for tests and the benchmark) -------------------

/// 3x3, stride 1, zero padding 1. input [N, C, H, W], weight [K, C, 3, 3] -> [N, K, H, W].
/// OpenMP-parallel over images (im2col + matrix product).
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Adaptive average pooling of [N, C, H, W] to [N, C, out, out] (PyTorch window convention).
Tensor adaptive_avg_pool(const Tensor& input, std::size_t out);

namespace reference {

/// Direct nested-loop convolution, the serial oracle for crossrsa::conv2d.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias);

}  // namespace reference

}  // namespace crossrsa
