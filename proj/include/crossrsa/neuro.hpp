#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "crossrsa/rdm.hpp"

namespace crossrsa {

enum class Species { human, macaque, synthetic };

std::string_view to_string(Species species);
Species parse_species(std::string_view text);

inline constexpr std::string_view kNeuroFormat = "crossrsa-neuro/1";

/// Stimuli x neurons x repetitions responses. Missing repetitions are NaN.
struct NeuralDataset {
  Species species = Species::synthetic;
  std::string region;
  std::vector<std::string> stimulus_ids;
  std::vector<std::string> neuron_ids;
  std::size_t n_repetitions = 0;
  std::vector<double> responses;  // [stimulus][neuron][repetition]

  static NeuralDataset empty(Species species, std::string region, std::vector<std::string> stimulus_ids,
                             std::vector<std::string> neuron_ids, std::size_t n_repetitions);

  std::size_t n_stimuli() const { return stimulus_ids.size(); }
  std::size_t n_neurons() const { return neuron_ids.size(); }

  std::size_t index(std::size_t s, std::size_t n, std::size_t r) const {
    return (s * n_neurons() + n) * n_repetitions + r;
  }
  double& at(std::size_t s, std::size_t n, std::size_t r) { return responses[index(s, n, r)]; }
  double at(std::size_t s, std::size_t n, std::size_t r) const { return responses[index(s, n, r)]; }

  /// Largest number of non-missing repetitions of any neuron, per stimulus.
  std::vector<std::size_t> repetition_counts() const;

  /// Unique IDs, consistent array size, every (stimulus, neuron) cell has at
  /// least one non-missing repetition, present values finite.
  void validate() const;

  bool operator==(const NeuralDataset& other) const;
};

/// Per-stimulus mean over non-missing repetitions (stimuli x neurons).
FeatureMatrix average_repetitions(const NeuralDataset& data);

enum class FileEncoding { text, binary };

/// Reads either encoding; the binary variant is recognised by its leading
/// length-prefixed magic string.
NeuralDataset load_neural_dataset(const std::filesystem::path& path);
void save_neural_dataset(const NeuralDataset& data, const std::filesystem::path& path,
                         FileEncoding encoding = FileEncoding::text);

struct SyntheticSpec {
  std::string generator_layer;
  double snr = 10.0;  // var(signal) / var(noise) per neuron
  std::size_t n_neurons = 100;
  std::size_t n_repetitions = 1;
  std::uint64_t seed = 0;
  std::string region = "synthetic";
};

struct SyntheticDraw {
  NeuralDataset dataset;
  Matrix signal;  // noiseless stimuli x neurons readout
};

/// Each neuron is a standard-normal linear readout of the source features
/// (each stimulus pattern centred across features first)
/// plus i.i.d. Gaussian noise per repetition, scaled so that the per-neuron
/// signal variance over stimuli divided by the noise variance equals snr.
SyntheticDraw generate_synthetic_with_signal(const SyntheticSpec& spec, const FeatureMatrix& source);
NeuralDataset generate_synthetic(const SyntheticSpec& spec, const FeatureMatrix& source);

}  // namespace crossrsa
