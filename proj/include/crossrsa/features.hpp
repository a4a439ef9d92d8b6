#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crossrsa/image.hpp"
#include "crossrsa/network.hpp"
#include "crossrsa/neuro.hpp"
#include "crossrsa/rdm.hpp"

namespace crossrsa {

enum class StimulusDomain { objects, textures, other };
std::string_view to_string(StimulusDomain domain);
StimulusDomain parse_stimulus_domain(std::string_view text);

inline constexpr std::string_view kStimulusFormat = "crossrsa-stim/1";

struct StimulusSet {
  std::vector<std::string> stimulus_ids;
  std::vector<Image> images;
  StimulusDomain domain = StimulusDomain::other;

  std::size_t size() const { return stimulus_ids.size(); }
  void validate() const;  // unique plain IDs, one non-empty image each
};

/// Manifest layout (text):
///   [header]  format,crossrsa-stim/1 / domain,<tag> / n_stimuli,<m>
///   [stimuli] index,id,path   (PNG path relative to the manifest)
StimulusSet load_stimulus_set(const std::filesystem::path& manifest);
/// Writes the manifest plus one PNG per stimulus under `<manifest dir>/images/`.
void save_stimulus_set(const StimulusSet& set, const std::filesystem::path& manifest);

/// Ordered layer -> region pairs; a layer may feed several regions.
struct LayerRegionMap {
  std::vector<std::pair<std::string, std::string>> pairs;

  /// Human: Conv1->V1, Conv1->V2, Conv2->V4, Conv3->LOC, FC1->IT.
  /// Macaque: Conv1->V1, Conv1->V2, Conv2->V4, FC1->IT.
  static LayerRegionMap defaults(Species species);
  /// "Conv1:V1,Conv2:V4" style override.
  static LayerRegionMap parse(std::string_view text);
  /// Throws ConfigError when the region is not mapped.
  std::string layer_for(std::string_view region) const;
  std::vector<std::string> regions() const;
};

inline constexpr std::size_t kStimulusSize = 224;

/// Bilinear resize to target x target, then per-channel standardisation with
/// the checkpoint's constants. Returns [N, 3, target, target].
Tensor preprocess_stimuli(const StimulusSet& set, std::size_t target, const Normalization& norm);

/// Flattened (channel, y, x) block outputs of `layer` for every stimulus, in
/// set order. Provenance: condition = rule label, seed, layer.
FeatureMatrix extract_features(const Checkpoint& ckpt, const StimulusSet& set, const std::string& layer,
                               std::size_t target = kStimulusSize, std::size_t batch_size = 16);

inline constexpr std::string_view kFeatureFormat = "crossrsa-feat/1";

/// Binary: the shared tensor container with metadata model/layer/seed, table
/// "stimuli" and tensor "features" [m, k]. Text: [header] (format, model,
/// layer, seed, n_stimuli, n_features), [stimuli] index,id, and [features]
/// rows "index,v_0,...,v_{k-1}".
void export_features(const FeatureMatrix& fm, const std::filesystem::path& path,
                     FileEncoding encoding = FileEncoding::binary);
/// Reads either encoding (detected from the file). Provenance comes from the header.
FeatureMatrix import_external_features(const std::filesystem::path& path);

}  // namespace crossrsa
