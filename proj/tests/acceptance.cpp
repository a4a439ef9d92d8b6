// Acceptance suite: one PASS/FAIL line per primary criterion. Tolerances and
// runtime limits are pinned below; the process exits non-zero on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "crossrsa/cross_species.hpp"
#include "crossrsa/features.hpp"
#include "crossrsa/learnrules.hpp"
#include "crossrsa/neuro.hpp"
#include "crossrsa/resample.hpp"
#include "crossrsa/stats.hpp"
#include "crossrsa/stdp.hpp"
#include "crossrsa/toy_data.hpp"
#include "nets.hpp"
#include "oracle.hpp"
#include "planted.hpp"
#include "published.hpp"

using namespace crossrsa;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double round_to(double v, int digits) {
  const double s = std::pow(10.0, digits);
  return std::round(v * s) / s;
}

// --- exact test reproduction ------------------------------------------------------

Outcome exact_test_reproduction() {
  const auto h = published::human();
  const auto m = published::macaque();
  struct Want {
    const char* region;
    double tau, p;
  };
  const Want want[] = {{"V1", 0.40, 0.48}, {"V2", -0.20, 0.82}, {"V4", 0.20, 0.82}, {"IT", 0.00, 1.00}};
  Outcome o{true, ""};
  for (const auto& w : want) {
    const auto c = ranking_comparison(h.at(w.region), m.at(w.region), w.region);
    const bool ok = round_to(c.tau, 2) == w.tau && round_to(c.p_two_sided, 2) == w.p;
    o.pass &= ok;
    o.detail += std::string(w.region) + " tau=" + fmt("%.2f", c.tau) + " p=" + fmt("%.2f", c.p_two_sided) + " ";
  }
  return o;
}

// --- Mahonian oracle ----------------------------------------------------------------

Outcome mahonian_oracle() {
  std::size_t checked = 0, mismatches = 0;
  for (int n = 2; n <= 6; ++n) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = i;
    auto y = x;
    do {
      const auto r = exact_permutation_test(x, y);
      const auto want = oracle::mahonian_p(n, oracle::inversions(x, y));
      const double total = static_cast<double>(want.total);
      mismatches += r.p_two_sided != static_cast<double>(want.two_sided_count) / total;
      mismatches += r.p_one_sided != static_cast<double>(want.one_sided_count) / total;
      ++checked;
    } while (std::next_permutation(y.begin(), y.end()));
  }
  const std::vector<double> five{1, 2, 3, 4, 5};
  const auto best = exact_permutation_test(five, five);
  const bool minimal = best.p_two_sided == 2.0 / 120.0 && best.p_one_sided == 1.0 / 120.0;
  return {mismatches == 0 && minimal, std::to_string(checked) + " inputs, " + std::to_string(mismatches) +
                                          " mismatches; n=5 min p two=" + fmt("%.4f", best.p_two_sided) +
                                          " one=" + fmt("%.4f", best.p_one_sided)};
}

// --- interaction arithmetic ---------------------------------------------------------

Outcome interaction_arithmetic() {
  const auto h = published::human();
  const auto m = published::macaque();
  const auto cells = interaction_effects(h, m);
  auto get = [&](LearningRule rule, const std::string& region) {
    for (const auto& c : cells)
      if (c.rule == rule && c.region == region) return c.interaction;
    return std::nan("");
  };
  const double stdp_v1 = get(LearningRule::stdp, "V1");
  const double stdp_v2 = get(LearningRule::stdp, "V2");
  const double bp_it = get(LearningRule::bp, "IT");
  const double inv_h = v1_invariance(h.at("V1"));
  const double inv_m = v1_invariance(m.at("V1"));
  const bool ok = std::abs(stdp_v1 + 0.138) <= 5e-4 && std::abs(stdp_v2 + 0.124) <= 5e-4 &&
                  std::abs(bp_it - 0.035) <= 5e-4 && round_to(inv_h, 3) == 0.064 && round_to(inv_m, 3) == 0.147;
  return {ok, "STDP V1=" + fmt("%.3f", stdp_v1) + " STDP V2=" + fmt("%.3f", stdp_v2) + " BP IT=" +
                  fmt("%+.3f", bp_it) + " dRho human V1=" + fmt("%.3f", inv_h) + " macaque V1=" + fmt("%.3f", inv_m)};
}

// --- gradient correctness -----------------------------------------------------------

Outcome gradient_correctness() {
  auto spec = nets::toy_spec(16);
  const auto ckpt = init_network(7, spec);
  const auto batch = nets::random_batch(8, spec, 2);
  const double worst = nets::worst_fd_error(ckpt, batch, 100, 1e-6, 3);
  return {worst < 1e-4, "worst relative error " + fmt("%.2e", worst) + " over 100 probes"};
}

// --- PC / BP equivalence ------------------------------------------------------------

Outcome pc_bp_equivalence() {
  NetworkSpec spec;
  spec.input_channels = 10;
  spec.input_size = 1;
  spec.conv_widths = {};
  spec.fc_widths = {12, 8, 4};
  spec.activation = Activation::identity;
  const auto ckpt = init_network(3, spec);
  const auto batch = nets::random_batch(16, spec, 9);
  PredictiveCodingParams pc;
  pc.inference_steps = 200;
  const auto update = predictive_coding_update(ckpt, batch, pc);
  const auto bp = bp_gradient(ckpt, batch);
  Outcome o{true, ""};
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    auto descent = bp[l].weight.data;
    for (auto& v : descent) v = -v;
    const double r = oracle::pearson(update[l].weight.data, descent);
    o.pass &= r > 0.99;
    o.detail += spec.layer_name(l) + " r=" + fmt("%.5f", r) + " ";
  }
  return o;
}

// --- FA alignment -------------------------------------------------------------------

Outcome fa_alignment() {
  const auto data = make_toy_images(200, 8, 2, 7);
  TrainingConfig cfg;
  cfg.rule = LearningRule::fa;
  cfg.epochs = 10;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.02;
  cfg.spec.input_size = 8;
  cfg.spec.conv_widths = {8, 8};
  cfg.spec.fc_widths = {16, 2};
  struct Point {
    std::size_t epoch;
    double cosine;
  };
  std::vector<Point> points;
  train(cfg, data, [&](const BatchEvent& ev) {
    const auto bp = bp_gradient(*ev.before, *ev.data);
    const std::size_t hidden = ev.before->spec.fc1_index();
    auto flat = [](const LayerParams& p, double sign) {
      std::vector<double> v = p.weight.data;
      v.insert(v.end(), p.bias.data.begin(), p.bias.data.end());
      for (auto& x : v) x *= sign;
      return v;
    };
    points.push_back({ev.epoch, nets::cosine(flat((*ev.update)[hidden], 1.0), flat(bp[hidden], -1.0))});
  });
  std::size_t first = points.size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].cosine > 0.0) {
      first = i;
      break;
    }
  }
  if (first == points.size()) return {false, "cosine never positive"};
  std::size_t rest = 0, positive = 0;
  for (std::size_t i = first + 1; i < points.size(); ++i) {
    ++rest;
    positive += points[i].cosine > 0.0;
  }
  const double frac = rest ? static_cast<double>(positive) / static_cast<double>(rest) : 1.0;
  return {points[first].epoch <= 3 && frac >= 0.9,
          "first positive in epoch " + std::to_string(points[first].epoch) + ", positive in " +
              std::to_string(positive) + "/" + std::to_string(rest) + " later batches"};
}

// --- STDP sign ----------------------------------------------------------------------

Outcome stdp_sign() {
  Rng rng(12);
  const StdpParams p;
  int ltp = 0, ltd = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double w0 = rng.uniform();
    const auto t_pre = static_cast<int>(rng.below(10));
    const int t_post = t_pre + 1 + static_cast<int>(rng.below(5));
    StdpSynapse causal(w0, p), anti(w0, p);
    for (int t = 0; t < 20; ++t) {
      causal.step(t == t_pre, t == t_post);
      anti.step(t == t_post, t == t_pre);
    }
    ltp += causal.weight() > w0;
    ltd += anti.weight() < w0;
  }
  return {ltp == 100 && ltd == 100,
          "potentiation " + std::to_string(ltp) + "/100, depression " + std::to_string(ltd) + "/100"};
}

// --- ground-truth recovery ----------------------------------------------------------

Outcome ground_truth_recovery() {
  const std::vector<std::string> layers{"Conv1", "Conv2", "Conv3", "FC1"};
  int conv2_best = 0, snr_order = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ckpt = init_network(seed);
    const auto stimuli = make_toy_stimuli(40, 32, seed);
    std::vector<Rdm> rdms;
    std::vector<FeatureMatrix> feats;
    for (const auto& l : layers) {
      feats.push_back(extract_features(ckpt, stimuli, l, 32));
      rdms.push_back(compute_rdm(feats.back()));
    }
    auto neural_rdm = [&](double snr) {
      SyntheticSpec s;
      s.snr = snr;
      s.seed = seed;
      s.n_neurons = 100;
      s.generator_layer = "Conv2";
      return compute_rdm(average_repetitions(generate_synthetic(s, feats[1])));
    };
    const auto high = neural_rdm(10.0);
    std::size_t best = 0;
    std::vector<double> rhos;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      rhos.push_back(rsa_score(rdms[i], high));
      if (rhos[i] > rhos[best]) best = i;
    }
    conv2_best += best == 1;
    snr_order += rhos[1] > rsa_score(rdms[1], neural_rdm(0.5));
  }
  return {conv2_best >= 19 && snr_order == 20, "Conv2 best in " + std::to_string(conv2_best) +
                                                   "/20 seeds; rho(snr 10) > rho(snr 0.5) in " +
                                                   std::to_string(snr_order) + "/20"};
}

// --- noise ceiling calibration ------------------------------------------------------

Outcome noise_ceiling_calibration() {
  const auto z = planted::latent(40, 6, 11);
  const std::size_t half = 40;
  Outcome o{true, ""};
  for (double r : {0.3, 0.6, 0.9}) {
    const double sigma = planted::sigma_for_reliability(z, half, r, 16, 100);
    Rng rng(77);
    const auto data = planted::to_dataset(planted::population(z, 2 * half, sigma, rng));
    const auto nc = split_half_ceiling(data, {100, 1, DistanceMetric::correlation});
    const double want = 2 * r / (1 + r);
    o.pass &= std::abs(nc.mean_corrected - want) <= 0.05;
    o.detail += "r=" + fmt("%.1f", r) + ": " + fmt("%.3f", nc.mean_corrected) + " vs " + fmt("%.3f", want) + " ";
  }
  return o;
}

// --- bootstrap determinism and coverage ---------------------------------------------

Outcome bootstrap_coverage() {
  // Stimulus population with a known model-brain RSA; each repetition draws a
  // sample of stimuli and asks whether the CI covers the population value.
  const std::size_t population = 400, sample = 30;
  const auto z = planted::latent(population, 5, 21);
  Rng wrng(22);
  const auto model_rows = planted::population(z, 30, 1.5, wrng);
  const auto brain_rows = planted::population(z, 30, 1.5, wrng);
  // library Spearman here: the oracle's O(n^2) ranking is too slow for 79800 pairs
  const double truth = spearman(oracle::upper(oracle::rdm(model_rows)), oracle::upper(oracle::rdm(brain_rows)));

  BootstrapOptions opt;
  opt.n_resamples = 1000;
  opt.seed = 5;
  int covered = 0;
  bool identical = true;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    Rng rng(23, rep);
    std::vector<std::size_t> idx(population);
    for (std::size_t i = 0; i < population; ++i) idx[i] = i;
    rng.shuffle(std::span<std::size_t>(idx));
    std::vector<std::vector<double>> a, b;
    for (std::size_t i = 0; i < sample; ++i) {
      a.push_back(model_rows[idx[i]]);
      b.push_back(brain_rows[idx[i]]);
    }
    const auto ra = compute_rdm(planted::to_features(a));
    const auto rb = compute_rdm(planted::to_features(b));
    const auto ci = bootstrap_rsa(ra, rb, opt);
    if (rep < 3) identical &= ci == bootstrap_rsa(ra, rb, opt) && ci == reference::bootstrap_rsa(ra, rb, opt);
    covered += ci.lower <= truth && truth <= ci.upper;
  }
  return {identical && covered >= 90, std::string(identical ? "bit-identical" : "NOT identical") +
                                          "; population rho " + fmt("%.3f", truth) + " covered in " +
                                          std::to_string(covered) + "/100"};
}

// --- STDP seed exclusion ------------------------------------------------------------

Outcome stdp_seed_exclusion() {
  std::vector<RsaResult> rs;
  for (long long s = 0; s < 5; ++s) {
    RsaResult r;
    r.condition = "STDP";
    r.seed = s;
    r.layer = "FC1";
    r.region = "IT";
    r.species = "macaque";
    r.rho = 0.1;
    r.has_fc1 = s != 0;
    rs.push_back(r);
  }
  const auto agg = aggregate_seeds(rs);
  std::string used;
  for (auto s : agg.seeds_used) used += std::to_string(s) + " ";
  return {agg.seeds_used == std::vector<long long>{1, 2, 3, 4}, "seeds_used = [ " + used + "]"};
}

struct Criterion {
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"exact-test reproduction", 1.0, exact_test_reproduction},
      {"mahonian oracle", 10.0, mahonian_oracle},
      {"interaction arithmetic", 1.0, interaction_arithmetic},
      {"gradient correctness", 60.0, gradient_correctness},
      {"pc-bp equivalence", 60.0, pc_bp_equivalence},
      {"fa alignment", 120.0, fa_alignment},
      {"stdp sign", 1.0, stdp_sign},
      {"ground-truth recovery", 300.0, ground_truth_recovery},
      {"noise-ceiling calibration", 120.0, noise_ceiling_calibration},
      {"bootstrap determinism and coverage", 120.0, bootstrap_coverage},
      {"stdp seed exclusion", 1.0, stdp_seed_exclusion},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s %s: %s (%.2f s, limit %.0f s%s)\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                c.limit_seconds, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
  return failures == 0 ? 0 : 1;
}
