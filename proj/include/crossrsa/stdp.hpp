#pragma once

#include <cstddef>

#include "crossrsa/network.hpp"

namespace crossrsa {

/// Pair-based STDP with exponential traces. Times are in discrete steps.
struct StdpParams {
  double tau_plus = 2.0;
  double tau_minus = 2.0;
  double a_plus = 0.01;
  double a_minus = 0.0105;
  std::size_t time_steps = 8;  // latency window used to turn rates into spike times
};

/// Weight change for one pre/post spike pair with dt = t_post - t_pre:
/// +a_plus * exp(-dt / tau_plus) for dt > 0, -a_minus * exp(dt / tau_minus)
/// for dt < 0, zero for coincident spikes.
double stdp_pair_change(double dt, const StdpParams& params);

/// A single synapse driven step by step; traces decay by exp(-1/tau) per step
/// and are read before the current step's spikes are added.
class StdpSynapse {
 public:
  StdpSynapse(double weight, const StdpParams& params) : weight_(weight), params_(params) {}

  void step(bool pre_spike, bool post_spike);
  double weight() const { return weight_; }

 private:
  double weight_;
  StdpParams params_;
  double pre_trace_ = 0.0;
  double post_trace_ = 0.0;
};

/// Latency code: stronger activity fires earlier. Returns -1 for silent units
/// (activity <= 0), else round((1 - a / a_max) * (time_steps - 1)).
int spike_time(double activity, double max_activity, std::size_t time_steps);

/// One unsupervised STDP update of conv layer `l` from a batch of layer
/// inputs [N, C, H, W]. Rectified inputs and outputs are latency coded per
/// image; at every position only the most active filter (winner-take-all)
/// learns from the spike timing of its input patch. Per-image changes are
/// averaged over winning positions, summed over the batch, and each filter is
/// renormalised to its previous L2 norm.
void stdp_conv_update(Checkpoint& ckpt, std::size_t l, const Tensor& layer_input, const StdpParams& params);

}  // namespace crossrsa
