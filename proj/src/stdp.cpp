#include "crossrsa/stdp.hpp"

#include <algorithm>
#include <cmath>

#include "crossrsa/error.hpp"
#include "network_internal.hpp"

namespace crossrsa {

double stdp_pair_change(double dt, const StdpParams& params) {
  if (dt > 0.0) return params.a_plus * std::exp(-dt / params.tau_plus);
  if (dt < 0.0) return -params.a_minus * std::exp(dt / params.tau_minus);
  return 0.0;
}

void StdpSynapse::step(bool pre_spike, bool post_spike) {
  pre_trace_ *= std::exp(-1.0 / params_.tau_plus);
  post_trace_ *= std::exp(-1.0 / params_.tau_minus);
  if (post_spike) weight_ += params_.a_plus * pre_trace_;    // pre fired earlier
  if (pre_spike) weight_ -= params_.a_minus * post_trace_;   // post fired earlier
  if (pre_spike) pre_trace_ += 1.0;
  if (post_spike) post_trace_ += 1.0;
}

int spike_time(double activity, double max_activity, std::size_t time_steps) {
  if (!(activity > 0.0) || !(max_activity > 0.0) || time_steps == 0) return -1;
  const double frac = std::clamp(1.0 - activity / max_activity, 0.0, 1.0);
  return static_cast<int>(std::lround(frac * static_cast<double>(time_steps - 1)));
}

void stdp_conv_update(Checkpoint& ckpt, std::size_t l, const Tensor& layer_input, const StdpParams& params) {
  if (!ckpt.spec.is_conv(l)) throw ConfigError("stdp_conv_update: " + ckpt.spec.layer_name(l) + " is not a conv layer");
  auto& layer = ckpt.layers[l];
  const std::size_t n = layer_input.dim(0), c = layer_input.dim(1), h = layer_input.dim(2), w = layer_input.dim(3);
  const std::size_t k = layer.weight.dim(0), q = c * 9, hw = h * w;
  if (layer.weight.dim(1) != c) throw ConfigError("stdp_conv_update: input channels do not match layer");

  const Tensor post_all = conv2d(layer_input, layer.weight, layer.bias);
  std::vector<std::vector<double>> deltas(n, std::vector<double>(k * q, 0.0));
  const auto count = static_cast<std::ptrdiff_t>(n);

#pragma omp parallel
  {
    std::vector<double> pre(c * hw);
    std::vector<double> col(q * hw);
    std::vector<int> pre_time(q * hw);
    std::vector<std::size_t> wins(k);
#pragma omp for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
      const auto img = static_cast<std::size_t>(ii);
      const double* src = layer_input.data.data() + img * c * hw;
      for (std::size_t i = 0; i < c * hw; ++i) pre[i] = detail::relu(src[i]);
      detail::im2col_image(pre.data(), c, h, w, col.data());
      const double pre_max = *std::max_element(pre.begin(), pre.end());
      for (std::size_t i = 0; i < q * hw; ++i) pre_time[i] = spike_time(col[i], pre_max, params.time_steps);

      const double* post = post_all.data.data() + img * k * hw;
      double post_max = 0.0;
      for (std::size_t i = 0; i < k * hw; ++i) post_max = std::max(post_max, post[i]);

      auto& delta = deltas[img];
      std::fill(wins.begin(), wins.end(), 0);
      for (std::size_t p = 0; p < hw; ++p) {
        std::size_t winner = 0;
        for (std::size_t o = 1; o < k; ++o) {
          if (post[o * hw + p] > post[winner * hw + p]) winner = o;
        }
        const int t_post = spike_time(post[winner * hw + p], post_max, params.time_steps);
        if (t_post < 0) continue;
        ++wins[winner];
        double* drow = delta.data() + winner * q;
        for (std::size_t j = 0; j < q; ++j) {
          const int t_pre = pre_time[j * hw + p];
          if (t_pre < 0) continue;
          drow[j] += stdp_pair_change(static_cast<double>(t_post - t_pre), params);
        }
      }
      for (std::size_t o = 0; o < k; ++o) {
        if (wins[o] == 0) continue;
        const double scale = 1.0 / static_cast<double>(wins[o]);
        for (std::size_t j = 0; j < q; ++j) delta[o * q + j] *= scale;
      }
    }
  }

  for (std::size_t o = 0; o < k; ++o) {
    double* wrow = layer.weight.data.data() + o * q;
    double before = 0.0;
    for (std::size_t j = 0; j < q; ++j) before += wrow[j] * wrow[j];
    for (std::size_t img = 0; img < n; ++img) {
      for (std::size_t j = 0; j < q; ++j) wrow[j] += deltas[img][o * q + j];
    }
    double after = 0.0;
    for (std::size_t j = 0; j < q; ++j) after += wrow[j] * wrow[j];
    if (after > 0.0 && before > 0.0) {
      const double scale = std::sqrt(before / after);
      for (std::size_t j = 0; j < q; ++j) wrow[j] *= scale;
    }
  }
}

}  // namespace crossrsa
