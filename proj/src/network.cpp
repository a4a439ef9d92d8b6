#include "crossrsa/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crossrsa/error.hpp"
#include "crossrsa/io.hpp"
#include "crossrsa/rng.hpp"
#include "network_internal.hpp"

namespace crossrsa {

std::string_view to_string(LearningRule rule) {
  switch (rule) {
    case LearningRule::bp:
      return "BP";
    case LearningRule::fa:
      return "FA";
    case LearningRule::pc:
      return "PC";
    case LearningRule::stdp:
      return "STDP";
    case LearningRule::random:
      return "Random";
  }
  return "unknown";
}

LearningRule parse_learning_rule(std::string_view text) {
  if (text == "BP" || text == "bp") return LearningRule::bp;
  if (text == "FA" || text == "fa") return LearningRule::fa;
  if (text == "PC" || text == "pc") return LearningRule::pc;
  if (text == "STDP" || text == "stdp") return LearningRule::stdp;
  if (text == "Random" || text == "random") return LearningRule::random;
  throw ConfigError("unknown learning rule '" + std::string(text) + "'");
}

std::string NetworkSpec::layer_name(std::size_t layer) const {
  if (layer < n_conv()) return "Conv" + std::to_string(layer + 1);
  if (layer < n_layers()) return "FC" + std::to_string(layer - n_conv() + 1);
  throw ConfigError("layer index " + std::to_string(layer) + " out of range");
}

std::size_t NetworkSpec::layer_index(std::string_view name) const {
  for (std::size_t i = 0; i < n_layers(); ++i) {
    if (layer_name(i) == name) return i;
  }
  throw ConfigError("unknown layer '" + std::string(name) + "'");
}

std::size_t NetworkSpec::flat_features() const {
  if (n_conv() == 0) return input_channels * input_size * input_size;
  return conv_widths.back() * grid() * grid();
}

void NetworkSpec::validate() const {
  if (input_channels == 0 || input_size == 0) throw ConfigError("NetworkSpec: empty input");
  if (fc_widths.empty()) throw ConfigError("NetworkSpec: need at least one fully connected layer");
  for (auto w : conv_widths) {
    if (w == 0) throw ConfigError("NetworkSpec: zero conv width");
  }
  for (auto w : fc_widths) {
    if (w == 0) throw ConfigError("NetworkSpec: zero FC width");
  }
  if (n_conv() > 0 && (input_size % (std::size_t{1} << n_conv()) != 0)) {
    throw ConfigError("NetworkSpec: input size must be divisible by 2^" + std::to_string(n_conv()));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  t.shape = std::move(shape);
  t.data.assign(n, 0.0);
  return t;
}

namespace {

std::vector<std::size_t> weight_shape(const NetworkSpec& spec, std::size_t l) {
  if (spec.is_conv(l)) {
    const std::size_t in = l == 0 ? spec.input_channels : spec.conv_widths[l - 1];
    return {spec.conv_widths[l], in, 3, 3};
  }
  const std::size_t f = l - spec.n_conv();
  const std::size_t in = f == 0 ? spec.flat_features() : spec.fc_widths[f - 1];
  return {spec.fc_widths[f], in};
}

std::size_t fan_in(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) n *= shape[i];
  return n;
}

Tensor kaiming(const std::vector<std::size_t>& shape, Rng& rng) {
  Tensor t = Tensor::zeros(shape);
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in(shape)));
  for (auto& v : t.data) v = sd * rng.normal();
  return t;
}

}  // namespace

void Checkpoint::validate() const {
  spec.validate();
  if (layers.size() != spec.n_layers()) throw DataError("Checkpoint: layer count does not match spec");
  if (!has_fc1 && rule != LearningRule::stdp) {
    throw DataError("Checkpoint: a checkpoint without FC1 weights is only valid for STDP");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const bool absent = !has_fc1 && l == spec.fc1_index();
    const auto expected = weight_shape(spec, l);
    if (absent) {
      if (!layers[l].weight.data.empty() || !layers[l].bias.data.empty()) {
        throw DataError("Checkpoint: has_fc1 = false but FC1 tensors are present");
      }
      continue;
    }
    if (layers[l].weight.shape != expected || layers[l].weight.size() != Tensor::zeros(expected).size()) {
      throw DataError("Checkpoint: weight shape mismatch at " + spec.layer_name(l));
    }
    if (layers[l].bias.shape != std::vector<std::size_t>{expected[0]} || layers[l].bias.size() != expected[0]) {
      throw DataError("Checkpoint: bias shape mismatch at " + spec.layer_name(l));
    }
  }
  if (normalization.mean.size() != spec.input_channels || normalization.std.size() != spec.input_channels) {
    throw DataError("Checkpoint: normalization constants must have one entry per input channel");
  }
  for (double s : normalization.std) {
    if (!(s > 0.0)) throw DataError("Checkpoint: normalization std must be positive");
  }
}

Checkpoint init_network(std::uint64_t seed, const NetworkSpec& spec) {
  spec.validate();
  Checkpoint ckpt;
  ckpt.spec = spec;
  ckpt.seed = seed;
  ckpt.rule = LearningRule::random;
  ckpt.epochs_trained = 0;
  ckpt.has_fc1 = true;
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    Rng rng(seed, l);
    const auto shape = weight_shape(spec, l);
    ckpt.layers.push_back({kaiming(shape, rng), Tensor::zeros({shape[0]})});
  }
  ckpt.normalization.mean.assign(spec.input_channels, 0.0);
  ckpt.normalization.std.assign(spec.input_channels, 1.0);
  return ckpt;
}

// --- checkpoint file ------------------------------------------------------------

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<std::size_t> parse_sizes(const std::string& s, std::string_view what) {
  std::vector<std::size_t> out;
  for (const auto& item : io::split_list(s)) {
    const auto v = io::parse_int(item, what);
    if (v <= 0) throw DataError(std::string(what) + ": widths must be positive");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

io::NamedTensor to_named(const std::string& name, const Tensor& t) {
  return {name, std::vector<std::uint64_t>(t.shape.begin(), t.shape.end()), t.data};
}

Tensor from_named(const io::NamedTensor& n) {
  return {std::vector<std::size_t>(n.shape.begin(), n.shape.end()), n.values};
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.validate();
  io::Container c;
  c.format = std::string(kCheckpointFormat);
  c.metadata = {
      {"rule", std::string(to_string(ckpt.rule))},
      {"seed", std::to_string(ckpt.seed)},
      {"epochs_trained", std::to_string(ckpt.epochs_trained)},
      {"has_fc1", ckpt.has_fc1 ? "true" : "false"},
      {"input_channels", std::to_string(ckpt.spec.input_channels)},
      {"input_size", std::to_string(ckpt.spec.input_size)},
      {"conv_widths", join_sizes(ckpt.spec.conv_widths)},
      {"fc_widths", join_sizes(ckpt.spec.fc_widths)},
      {"activation", ckpt.spec.activation == Activation::relu ? "relu" : "identity"},
  };
  for (std::size_t l = 0; l < ckpt.layers.size(); ++l) {
    if (!ckpt.has_fc1 && l == ckpt.spec.fc1_index()) continue;
    const auto name = ckpt.spec.layer_name(l);
    c.tensors.push_back(to_named(name + "/weight", ckpt.layers[l].weight));
    c.tensors.push_back(to_named(name + "/bias", ckpt.layers[l].bias));
  }
  const auto channels = ckpt.spec.input_channels;
  c.tensors.push_back({"normalization/mean", {channels}, ckpt.normalization.mean});
  c.tensors.push_back({"normalization/std", {channels}, ckpt.normalization.std});
  io::write_container(c, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto c = io::read_container(path, kCheckpointFormat);
  Checkpoint ckpt;
  const auto where = path.string();
  ckpt.rule = parse_learning_rule(c.meta("rule"));
  ckpt.seed = static_cast<std::uint64_t>(io::parse_int(c.meta("seed"), where + " seed"));
  ckpt.epochs_trained = static_cast<std::size_t>(io::parse_int(c.meta("epochs_trained"), where + " epochs_trained"));
  const auto& fc1 = c.meta("has_fc1");
  if (fc1 != "true" && fc1 != "false") throw DataError(where + ": has_fc1 must be true or false");
  ckpt.has_fc1 = fc1 == "true";
  ckpt.spec.input_channels = static_cast<std::size_t>(io::parse_int(c.meta("input_channels"), where));
  ckpt.spec.input_size = static_cast<std::size_t>(io::parse_int(c.meta("input_size"), where));
  ckpt.spec.conv_widths = parse_sizes(c.meta("conv_widths"), where + " conv_widths");
  ckpt.spec.fc_widths = parse_sizes(c.meta("fc_widths"), where + " fc_widths");
  const auto& act = c.meta("activation");
  if (act == "relu") {
    ckpt.spec.activation = Activation::relu;
  } else if (act == "identity") {
    ckpt.spec.activation = Activation::identity;
  } else {
    throw DataError(where + ": unknown activation '" + act + "'");
  }
  ckpt.spec.validate();
  for (std::size_t l = 0; l < ckpt.spec.n_layers(); ++l) {
    const auto name = ckpt.spec.layer_name(l);
    const auto* w = c.find_tensor(name + "/weight");
    const auto* b = c.find_tensor(name + "/bias");
    if (!ckpt.has_fc1 && l == ckpt.spec.fc1_index()) {
      if (w || b) throw DataError(where + ": has_fc1 = false but FC1 tensors are present");
      ckpt.layers.emplace_back();
      continue;
    }
    if (!w || !b) throw DataError(where + ": missing tensors for " + name);
    ckpt.layers.push_back({from_named(*w), from_named(*b)});
  }
  const auto* mean = c.find_tensor("normalization/mean");
  const auto* sd = c.find_tensor("normalization/std");
  if (!mean || !sd) throw DataError(where + ": missing normalization tensors");
  ckpt.normalization = {mean->values, sd->values};
  const std::size_t expected_tensors = 2 * ckpt.spec.n_layers() - (ckpt.has_fc1 ? 0 : 2) + 2;
  if (c.tensors.size() != expected_tensors) throw DataError(where + ": unexpected extra tensors");
  try {
    ckpt.validate();
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  }
  return ckpt;
}

// --- kernels ------------------------------------------------------------------

namespace {

/// col[(c*9 + ky*3 + kx) * HW + y*W + x] = in[c, y + ky - 1, x + kx - 1] (0 outside).
void im2col(const double* in, std::size_t channels, std::size_t h, std::size_t w, double* col) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        double* dst = col + ((c * 3 + ky) * 3 + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          for (std::size_t x = 0; x < w; ++x) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            const bool inside = sy >= 0 && sy < static_cast<std::ptrdiff_t>(h) && sx >= 0 &&
                                sx < static_cast<std::ptrdiff_t>(w);
            dst[y * w + x] = inside ? in[(c * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* col, std::size_t channels, std::size_t h, std::size_t w, double* out) {
  const std::size_t hw = h * w;
  std::fill(out, out + channels * hw, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const double* src = col + ((c * 3 + ky) * 3 + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t x = 0; x < w; ++x) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
            out[(c * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)] += src[y * w + x];
          }
        }
      }
    }
  }
}

void check_conv_args(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.shape.size() != 4 || weight.shape.size() != 4 || weight.dim(2) != 3 || weight.dim(3) != 3 ||
      input.dim(1) != weight.dim(1) || bias.size() != weight.dim(0)) {
    throw ConfigError("conv2d: incompatible input/weight/bias shapes");
  }
}

/// Conv forward for all images; keeps im2col buffers when `cols` is non-null.
Tensor conv_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, std::vector<double>* cols) {
  check_conv_args(input, weight, bias);
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t k = weight.dim(0), q = c * 9, hw = h * w;
  Tensor out = Tensor::zeros({n, k, h, w});
  if (cols) cols->assign(n * q * hw, 0.0);
  const auto count = static_cast<std::ptrdiff_t>(n);

#pragma omp parallel
  {
    std::vector<double> local(cols ? 0 : q * hw);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const auto img = static_cast<std::size_t>(i);
      double* col = cols ? cols->data() + img * q * hw : local.data();
      im2col(input.data.data() + img * c * hw, c, h, w, col);
      double* dst = out.data.data() + img * k * hw;
      for (std::size_t o = 0; o < k; ++o) {
        double* row = dst + o * hw;
        std::fill(row, row + hw, bias.data[o]);
        const double* wrow = weight.data.data() + o * q;
        for (std::size_t j = 0; j < q; ++j) {
          const double wv = wrow[j];
          const double* src = col + j * hw;
          for (std::size_t p = 0; p < hw; ++p) row[p] += wv * src[p];
        }
      }
    }
  }
  return out;
}

bool use_relu(const NetworkSpec& spec) { return spec.activation == Activation::relu; }

double act(const NetworkSpec& spec, double z) { return use_relu(spec) ? detail::relu(z) : z; }
double act_grad(const NetworkSpec& spec, double z) { return use_relu(spec) ? (z > 0.0 ? 1.0 : 0.0) : 1.0; }

std::pair<std::size_t, std::size_t> pool_window(std::size_t i, std::size_t in, std::size_t out) {
  const std::size_t start = (i * in) / out;
  const std::size_t end = ((i + 1) * in + out - 1) / out;
  return {start, end};
}

Tensor adaptive_pool_backward(const Tensor& d_out, const std::vector<std::size_t>& source_shape) {
  Tensor d_in = Tensor::zeros(source_shape);
  const std::size_t n = source_shape[0], c = source_shape[1], h = source_shape[2], w = source_shape[3];
  const std::size_t g = d_out.dim(2);
  for (std::size_t i = 0; i < n * c; ++i) {
    const double* src = d_out.data.data() + i * g * g;
    double* dst = d_in.data.data() + i * h * w;
    for (std::size_t oy = 0; oy < g; ++oy) {
      const auto [y0, y1] = pool_window(oy, h, g);
      for (std::size_t ox = 0; ox < g; ++ox) {
        const auto [x0, x1] = pool_window(ox, w, g);
        const double share = src[oy * g + ox] / static_cast<double>((y1 - y0) * (x1 - x0));
        for (std::size_t y = y0; y < y1; ++y) {
          for (std::size_t x = x0; x < x1; ++x) dst[y * w + x] += share;
        }
      }
    }
  }
  return d_in;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  return conv_forward(input, weight, bias, nullptr);
}

Tensor adaptive_avg_pool(const Tensor& input, std::size_t out) {
  if (input.shape.size() != 4 || out == 0) throw ConfigError("adaptive_avg_pool: expected [N, C, H, W]");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h < out || w < out) throw ConfigError("adaptive_avg_pool: input smaller than output grid");
  Tensor result = Tensor::zeros({n, c, out, out});
  for (std::size_t i = 0; i < n * c; ++i) {
    const double* src = input.data.data() + i * h * w;
    double* dst = result.data.data() + i * out * out;
    for (std::size_t oy = 0; oy < out; ++oy) {
      const auto [y0, y1] = pool_window(oy, h, out);
      for (std::size_t ox = 0; ox < out; ++ox) {
        const auto [x0, x1] = pool_window(ox, w, out);
        double sum = 0.0;
        for (std::size_t y = y0; y < y1; ++y) {
          for (std::size_t x = x0; x < x1; ++x) sum += src[y * w + x];
        }
        dst[oy * out + ox] = sum / static_cast<double>((y1 - y0) * (x1 - x0));
      }
    }
  }
  return result;
}

namespace reference {

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  check_conv_args(input, weight, bias);
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3), k = weight.dim(0);
  Tensor out = Tensor::zeros({n, k, h, w});
  for (std::size_t img = 0; img < n; ++img) {
    for (std::size_t o = 0; o < k; ++o) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          double acc = bias.data[o];
          for (std::size_t ci = 0; ci < c; ++ci) {
            for (std::size_t ky = 0; ky < 3; ++ky) {
              for (std::size_t kx = 0; kx < 3; ++kx) {
                const long sy = static_cast<long>(y + ky) - 1;
                const long sx = static_cast<long>(x + kx) - 1;
                if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) continue;
                acc += weight.data[((o * c + ci) * 3 + ky) * 3 + kx] *
                       input.data[((img * c + ci) * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)];
              }
            }
          }
          out.data[((img * k + o) * h + y) * w + x] = acc;
        }
      }
    }
  }
  return out;
}

}  // namespace reference

// --- layers -------------------------------------------------------------------

namespace detail {

double relu(double v) { return v > 0.0 ? v : 0.0; }

void im2col_image(const double* image, std::size_t channels, std::size_t h, std::size_t w, double* col) {
  im2col(image, channels, h, w, col);
}

Tensor layer_forward(const Checkpoint& ckpt, std::size_t l, const Tensor& input, LayerCache* cache) {
  const auto& spec = ckpt.spec;
  if (!ckpt.has_fc1 && l == spec.fc1_index()) {
    throw ConfigError("checkpoint has no FC1 weights (conv-only STDP checkpoint, e.g. seed 0); FC1 is unavailable");
  }
  const auto& params = ckpt.layers[l];

  if (spec.is_conv(l)) {
    if (input.shape.size() != 4 || input.dim(2) % 2 != 0 || input.dim(3) % 2 != 0) {
      throw ConfigError(spec.layer_name(l) + ": input must be [N, C, H, W] with even H and W");
    }
    std::vector<double>* cols = cache ? &cache->cols : nullptr;
    Tensor pre = conv_forward(input, params.weight, params.bias, cols);
    const std::size_t n = pre.dim(0), k = pre.dim(1), h = pre.dim(2), w = pre.dim(3);
    const std::size_t oh = h / 2, ow = w / 2;
    Tensor out = Tensor::zeros({n, k, oh, ow});
    std::vector<std::uint32_t> argmax(out.size());
    const auto planes = static_cast<std::ptrdiff_t>(n * k);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t pi = 0; pi < planes; ++pi) {
      const auto plane = static_cast<std::size_t>(pi);
      const double* src = pre.data.data() + plane * h * w;
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
          std::size_t best = (2 * y) * w + 2 * x;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = (2 * y + dy) * w + 2 * x + dx;
              if (src[idx] > src[best]) best = idx;
            }
          }
          const std::size_t o = plane * oh * ow + y * ow + x;
          out.data[o] = act(spec, src[best]);
          argmax[o] = static_cast<std::uint32_t>(plane * h * w + best);
        }
      }
    }
    if (cache) {
      cache->input = input;
      cache->pre = std::move(pre);
      cache->argmax = std::move(argmax);
    }
    return out;
  }

  // Fully connected: flatten (and adaptively pool) conv maps first.
  Tensor flat;
  std::vector<std::size_t> source_shape;
  if (input.shape.size() == 4) {
    source_shape = input.shape;
    const std::size_t g = spec.n_conv() > 0 ? spec.grid() : spec.input_size;
    flat = input.dim(2) == g && input.dim(3) == g ? input : adaptive_avg_pool(input, g);
    const std::size_t n = flat.dim(0);
    flat.shape = {n, flat.size() / n};
  } else {
    flat = input;
  }
  const std::size_t n = flat.dim(0), in = flat.dim(1), out_dim = params.weight.dim(0);
  if (in != params.weight.dim(1)) {
    throw ConfigError(spec.layer_name(l) + ": expected " + std::to_string(params.weight.dim(1)) + " inputs, got " +
                      std::to_string(in));
  }
  const bool last = l + 1 == spec.n_layers();
  Tensor pre = Tensor::zeros({n, out_dim});
  Tensor out = Tensor::zeros({n, out_dim});
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* x = flat.data.data() + i * in;
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double* wrow = params.weight.data.data() + o * in;
      double acc = params.bias.data[o];
      for (std::size_t j = 0; j < in; ++j) acc += wrow[j] * x[j];
      pre.data[i * out_dim + o] = acc;
      out.data[i * out_dim + o] = last ? acc : act(spec, acc);
    }
  }
  if (cache) {
    cache->input = std::move(flat);
    cache->source_shape = std::move(source_shape);
    cache->pre = std::move(pre);
  }
  return out;
}

LayerGrad layer_backward(const Checkpoint& ckpt, std::size_t l, const LayerCache& cache, const Tensor& d_output,
                         const Tensor* propagate) {
  const auto& spec = ckpt.spec;
  LayerGrad g;
  const auto& params = ckpt.layers[l];
  g.params.weight = Tensor::zeros(params.weight.shape);
  g.params.bias = Tensor::zeros(params.bias.shape);

  if (spec.is_conv(l)) {
    const std::size_t n = cache.pre.dim(0), k = cache.pre.dim(1), h = cache.pre.dim(2), w = cache.pre.dim(3);
    const std::size_t c = cache.input.dim(1), q = c * 9, hw = h * w;
    // Through pooling and activation.
    Tensor dz = Tensor::zeros(cache.pre.shape);
    for (std::size_t o = 0; o < d_output.size(); ++o) {
      const auto idx = cache.argmax[o];
      dz.data[idx] += d_output.data[o] * act_grad(spec, cache.pre.data[idx]);
    }
    const auto out_channels = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t oi = 0; oi < out_channels; ++oi) {
      const auto o = static_cast<std::size_t>(oi);
      double* gw = g.params.weight.data.data() + o * q;
      double gb = 0.0;
      for (std::size_t img = 0; img < n; ++img) {
        const double* dzr = dz.data.data() + (img * k + o) * hw;
        const double* col = cache.cols.data() + img * q * hw;
        for (std::size_t p = 0; p < hw; ++p) gb += dzr[p];
        for (std::size_t j = 0; j < q; ++j) {
          const double* cj = col + j * hw;
          double acc = 0.0;
          for (std::size_t p = 0; p < hw; ++p) acc += dzr[p] * cj[p];
          gw[j] += acc;
        }
      }
      g.params.bias.data[o] = gb;
    }
    if (propagate) {
      g.d_input = Tensor::zeros(cache.input.shape);
      const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
      {
        std::vector<double> dcol(q * hw);
#pragma omp for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
          const auto img = static_cast<std::size_t>(ii);
          std::fill(dcol.begin(), dcol.end(), 0.0);
          for (std::size_t o = 0; o < k; ++o) {
            const double* dzr = dz.data.data() + (img * k + o) * hw;
            const double* frow = propagate->data.data() + o * q;
            for (std::size_t j = 0; j < q; ++j) {
              const double fv = frow[j];
              double* dst = dcol.data() + j * hw;
              for (std::size_t p = 0; p < hw; ++p) dst[p] += fv * dzr[p];
            }
          }
          col2im(dcol.data(), c, h, w, g.d_input.data.data() + img * c * hw);
        }
      }
    }
    return g;
  }

  const std::size_t n = cache.pre.dim(0), out_dim = cache.pre.dim(1), in = cache.input.dim(1);
  const bool last = l + 1 == spec.n_layers();
  Tensor dz = Tensor::zeros(cache.pre.shape);
  for (std::size_t i = 0; i < dz.size(); ++i) {
    dz.data[i] = last ? d_output.data[i] : d_output.data[i] * act_grad(spec, cache.pre.data[i]);
  }
  const auto outs = static_cast<std::ptrdiff_t>(out_dim);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t oi = 0; oi < outs; ++oi) {
    const auto o = static_cast<std::size_t>(oi);
    double* gw = g.params.weight.data.data() + o * in;
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = dz.data[i * out_dim + o];
      gb += d;
      const double* x = cache.input.data.data() + i * in;
      for (std::size_t j = 0; j < in; ++j) gw[j] += d * x[j];
    }
    g.params.bias.data[o] = gb;
  }
  if (propagate) {
    Tensor d_flat = Tensor::zeros({n, in});
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      double* dst = d_flat.data.data() + i * in;
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double d = dz.data[i * out_dim + o];
        const double* frow = propagate->data.data() + o * in;
        for (std::size_t j = 0; j < in; ++j) dst[j] += d * frow[j];
      }
    }
    if (cache.source_shape.empty()) {
      g.d_input = std::move(d_flat);
    } else {
      const auto& src = cache.source_shape;
      const std::size_t gsz = spec.n_conv() > 0 ? spec.grid() : spec.input_size;
      d_flat.shape = {src[0], src[1], gsz, gsz};
      g.d_input = src[2] == gsz && src[3] == gsz ? std::move(d_flat) : adaptive_pool_backward(d_flat, src);
    }
  }
  return g;
}

Tensor cross_entropy_grad(const Tensor& logits, std::span<const int> labels) {
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n) throw ConfigError("cross_entropy: label count does not match batch");
  Tensor d = Tensor::zeros(logits.shape);
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.data.data() + i * k;
    const double zmax = *std::max_element(z, z + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(z[j] - zmax);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(z[j] - zmax) / sum;
      d.data[i * k + j] = (p - (static_cast<int>(j) == labels[i] ? 1.0 : 0.0)) / static_cast<double>(n);
    }
  }
  return d;
}

Tensor forward_cached(const Checkpoint& ckpt, const Tensor& images, std::vector<LayerCache>& caches) {
  caches.assign(ckpt.spec.n_layers(), {});
  Tensor x = images;
  for (std::size_t l = 0; l < ckpt.spec.n_layers(); ++l) x = layer_forward(ckpt, l, x, &caches[l]);
  return x;
}

Gradients backward_all(const Checkpoint& ckpt, const std::vector<LayerCache>& caches, const Tensor& d_logits,
                       std::span<const Tensor> feedback, std::size_t first_layer) {
  const std::size_t layers = ckpt.spec.n_layers();
  Gradients grads(layers);
  Tensor d = d_logits;
  for (std::size_t li = layers; li-- > first_layer;) {
    const Tensor* prop = nullptr;
    if (li > first_layer) prop = feedback.empty() ? &ckpt.layers[li].weight : &feedback[li];
    auto g = layer_backward(ckpt, li, caches[li], d, prop);
    grads[li] = std::move(g.params);
    d = std::move(g.d_input);
  }
  return grads;
}

}  // namespace detail

// --- public forward / gradients --------------------------------------------------

ForwardResult forward(const Checkpoint& ckpt, const Tensor& images, std::optional<std::string> stop_after) {
  const auto& spec = ckpt.spec;
  if (images.shape.size() != 4 || images.dim(1) != spec.input_channels) {
    throw ConfigError("forward: expected images [N, " + std::to_string(spec.input_channels) + ", H, W]");
  }
  const std::size_t factor = std::size_t{1} << spec.n_conv();
  if (images.dim(2) % factor != 0 || images.dim(3) % factor != 0 ||
      (spec.n_conv() > 0 && (images.dim(2) / factor < spec.grid() || images.dim(3) / factor < spec.grid()))) {
    throw ConfigError("forward: spatial size " + std::to_string(images.dim(2)) + "x" + std::to_string(images.dim(3)) +
                      " incompatible with the network");
  }
  const std::size_t last = stop_after ? spec.layer_index(*stop_after) : spec.n_layers() - 1;
  ForwardResult result;
  Tensor x = images;
  for (std::size_t l = 0; l <= last; ++l) {
    x = detail::layer_forward(ckpt, l, x, nullptr);
    if (l + 1 < spec.n_layers()) {
      result.activations[spec.layer_name(l)] = x;
    } else {
      result.logits = x;
    }
  }
  return result;
}

LossValue cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n) throw ConfigError("cross_entropy: label count does not match batch");
  LossValue v;
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.data.data() + i * k;
    const auto best = static_cast<int>(std::max_element(z, z + k) - z);
    const double zmax = z[best];
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(z[j] - zmax);
    v.loss += std::log(sum) + zmax - z[labels[i]];
    v.accuracy += best == labels[i] ? 1.0 : 0.0;
  }
  v.loss /= static_cast<double>(n);
  v.accuracy /= static_cast<double>(n);
  return v;
}

Gradients bp_gradient(const Checkpoint& ckpt, const Batch& batch, LossValue* loss) {
  return feedback_gradient(ckpt, {}, batch, loss);
}

Gradients feedback_gradient(const Checkpoint& ckpt, std::span<const Tensor> feedback, const Batch& batch,
                            LossValue* loss) {
  if (!feedback.empty() && feedback.size() != ckpt.spec.n_layers()) {
    throw ConfigError("feedback_gradient: need one feedback matrix per layer");
  }
  std::vector<detail::LayerCache> caches;
  const Tensor logits = detail::forward_cached(ckpt, batch.images, caches);
  if (loss) *loss = cross_entropy(logits, batch.labels);
  return detail::backward_all(ckpt, caches, detail::cross_entropy_grad(logits, batch.labels), feedback);
}

std::vector<Tensor> make_feedback_weights(const Checkpoint& ckpt, std::uint64_t seed) {
  std::vector<Tensor> fb;
  for (std::size_t l = 0; l < ckpt.spec.n_layers(); ++l) {
    Rng rng(seed, 1000 + l);
    fb.push_back(kaiming(weight_shape(ckpt.spec, l), rng));
  }
  return fb;
}

Gradients predictive_coding_update(const Checkpoint& ckpt, const Batch& batch, const PredictiveCodingParams& params,
                                   LossValue* loss) {
  const std::size_t layers = ckpt.spec.n_layers();
  std::vector<detail::LayerCache> caches(layers);

  // Feedforward initialisation of the hidden latents (block outputs).
  std::vector<Tensor> latent(layers);
  Tensor x = batch.images;
  for (std::size_t l = 0; l < layers; ++l) {
    x = detail::layer_forward(ckpt, l, x, &caches[l]);
    latent[l] = x;
  }
  if (loss) *loss = cross_entropy(latent.back(), batch.labels);

  // errors[l] = -dF/dmu_l: (latent - prediction) for hidden layers,
  // the negative cross-entropy gradient at the output.
  std::vector<Tensor> errors(layers);
  const auto compute_errors = [&]() {
    for (std::size_t l = 0; l < layers; ++l) {
      const Tensor& input = l == 0 ? batch.images : latent[l - 1];
      const Tensor mu = detail::layer_forward(ckpt, l, input, &caches[l]);
      if (l + 1 == layers) {
        errors[l] = detail::cross_entropy_grad(mu, batch.labels);
        for (auto& v : errors[l].data) v = -v;
      } else {
        errors[l] = latent[l];
        for (std::size_t i = 0; i < mu.size(); ++i) errors[l].data[i] -= mu.data[i];
      }
    }
  };

  for (std::size_t step = 0; step < params.inference_steps; ++step) {
    compute_errors();
    for (std::size_t l = 0; l + 1 < layers; ++l) {
      const auto up = detail::layer_backward(ckpt, l + 1, caches[l + 1], errors[l + 1], &ckpt.layers[l + 1].weight);
      for (std::size_t i = 0; i < latent[l].size(); ++i) {
        latent[l].data[i] += params.inference_rate * (up.d_input.data[i] - errors[l].data[i]);
      }
    }
  }
  compute_errors();

  Gradients updates(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    updates[l] = detail::layer_backward(ckpt, l, caches[l], errors[l], nullptr).params;
  }
  return updates;
}

}  // namespace crossrsa
