#pragma once

// Layer-level forward/backward shared by the training rules. Not installed.

#include <cstdint>
#include <vector>

#include "crossrsa/network.hpp"

namespace crossrsa::detail {

struct LayerCache {
  Tensor input;                            // input as seen by the weights (flattened for FC)
  std::vector<std::size_t> source_shape;   // shape before flatten/adaptive pooling (FC after conv)
  Tensor pre;                              // pre-activation
  std::vector<std::uint32_t> argmax;       // conv: argmax into pre per pooled output
  std::vector<double> cols;                // conv: im2col buffers, one block per image
};

/// Output of layer `l`. Fills `cache` when non-null.
Tensor layer_forward(const Checkpoint& ckpt, std::size_t l, const Tensor& input, LayerCache* cache);

struct LayerGrad {
  LayerParams params;
  Tensor d_input;  // empty unless requested
};

/// Gradient of a scalar objective with respect to layer `l` parameters and
/// (when `propagate` is non-null) its input, given d objective / d output.
/// `propagate` is the matrix carrying error downwards: the forward weight for
/// exact gradients, a fixed random matrix for feedback alignment.
LayerGrad layer_backward(const Checkpoint& ckpt, std::size_t l, const LayerCache& cache, const Tensor& d_output,
                         const Tensor* propagate);

/// d(mean cross-entropy)/d logits.
Tensor cross_entropy_grad(const Tensor& logits, std::span<const int> labels);

/// Full forward with caches for every layer; returns logits.
Tensor forward_cached(const Checkpoint& ckpt, const Tensor& images, std::vector<LayerCache>& caches);

/// Backward through layers >= first_layer using `propagate[l]` (or the forward
/// weights when `feedback` is empty). Layers below first_layer get empty grads.
Gradients backward_all(const Checkpoint& ckpt, const std::vector<LayerCache>& caches, const Tensor& d_logits,
                       std::span<const Tensor> feedback, std::size_t first_layer = 0);

double relu(double v);

/// 3x3 / padding 1 patch matrix of one image [C, H, W] -> [C*9, H*W].
void im2col_image(const double* image, std::size_t channels, std::size_t h, std::size_t w, double* col);

}  // namespace crossrsa::detail
