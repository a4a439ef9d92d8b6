#include "crossrsa/features.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "crossrsa/error.hpp"
#include "crossrsa/io.hpp"

namespace crossrsa {

std::string_view to_string(StimulusDomain domain) {
  switch (domain) {
    case StimulusDomain::objects:
      return "objects";
    case StimulusDomain::textures:
      return "textures";
    case StimulusDomain::other:
      return "other";
  }
  return "other";
}

StimulusDomain parse_stimulus_domain(std::string_view text) {
  if (text == "objects") return StimulusDomain::objects;
  if (text == "textures") return StimulusDomain::textures;
  if (text == "other") return StimulusDomain::other;
  throw DataError("unknown stimulus domain '" + std::string(text) + "'");
}

void StimulusSet::validate() const {
  if (images.size() != stimulus_ids.size()) throw DataError("StimulusSet: every stimulus needs exactly one image");
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < size(); ++i) {
    io::require_plain_label(stimulus_ids[i], "stimulus ID");
    if (!seen.insert(stimulus_ids[i]).second) throw DataError("StimulusSet: duplicate ID '" + stimulus_ids[i] + "'");
    const auto& img = images[i];
    if (img.width == 0 || img.height == 0 || img.data.size() != Image::kChannels * img.width * img.height) {
      throw DataError("StimulusSet: stimulus '" + stimulus_ids[i] + "' has no valid image payload");
    }
  }
}

StimulusSet load_stimulus_set(const std::filesystem::path& manifest) {
  const auto sections = io::read_sections(manifest);
  const auto header = io::key_values(io::find_section(sections, "header", manifest), manifest);
  const auto fmt = header.find("format");
  if (fmt == header.end() || fmt->second != kStimulusFormat) {
    throw DataError(manifest.string() + ": expected format " + std::string(kStimulusFormat));
  }
  StimulusSet set;
  if (const auto d = header.find("domain"); d != header.end()) set.domain = parse_stimulus_domain(d->second);
  const auto n = io::parse_count(header, "n_stimuli", manifest);

  const auto& table = io::find_section(sections, "stimuli", manifest);
  if (table.rows.empty() || table.rows[0] != std::vector<std::string>{"index", "id", "path"}) {
    throw DataError(manifest.string() + ": [stimuli] must start with 'index,id,path'");
  }
  const auto base = manifest.parent_path();
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const auto where = manifest.string() + ":" + std::to_string(table.first_line + i);
    if (row.size() != 3) throw DataError(where + ": expected index,id,path");
    if (io::parse_int(row[0], where) != static_cast<long long>(set.size())) {
      throw DataError(where + ": indices must be consecutive from 0");
    }
    const auto file = base / row[2];
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("stimulus '" + row[1] + "': cannot open " + file.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    set.images.push_back(decode_png(bytes, row[1]));
    set.stimulus_ids.push_back(row[1]);
  }
  if (set.size() != n) {
    throw DataError(manifest.string() + ": [stimuli] has " + std::to_string(set.size()) + " entries, header says " +
                    std::to_string(n));
  }
  set.validate();
  return set;
}

void save_stimulus_set(const StimulusSet& set, const std::filesystem::path& manifest) {
  set.validate();
  const auto dir = manifest.parent_path() / "images";
  std::filesystem::create_directories(dir);
  std::ofstream out(manifest);
  if (!out) throw DataError("cannot open '" + manifest.string() + "' for writing");
  out << "[header]\nformat," << kStimulusFormat << "\ndomain," << to_string(set.domain) << "\nn_stimuli,"
      << set.size() << "\n[stimuli]\nindex,id,path\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::string name = "stim_" + std::to_string(i) + ".png";
    write_png(set.images[i], dir / name);
    out << i << ',' << set.stimulus_ids[i] << ",images/" << name << '\n';
  }
  if (!out) throw DataError("error writing '" + manifest.string() + "'");
}

LayerRegionMap LayerRegionMap::defaults(Species species) {
  if (species == Species::human) {
    return {{{"Conv1", "V1"}, {"Conv1", "V2"}, {"Conv2", "V4"}, {"Conv3", "LOC"}, {"FC1", "IT"}}};
  }
  return {{{"Conv1", "V1"}, {"Conv1", "V2"}, {"Conv2", "V4"}, {"FC1", "IT"}}};
}

LayerRegionMap LayerRegionMap::parse(std::string_view text) {
  LayerRegionMap map;
  for (const auto& item : io::split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == item.size()) {
      throw ConfigError("layer map entry '" + item + "' must look like Layer:Region");
    }
    map.pairs.emplace_back(item.substr(0, colon), item.substr(colon + 1));
  }
  if (map.pairs.empty()) throw ConfigError("empty layer map");
  return map;
}

std::string LayerRegionMap::layer_for(std::string_view region) const {
  for (const auto& [layer, r] : pairs) {
    if (r == region) return layer;
  }
  throw ConfigError("no layer mapped to region '" + std::string(region) + "'");
}

std::vector<std::string> LayerRegionMap::regions() const {
  std::vector<std::string> out;
  for (const auto& p : pairs) out.push_back(p.second);
  return out;
}

Tensor preprocess_stimuli(const StimulusSet& set, std::size_t target, const Normalization& norm) {
  if (target == 0) throw ConfigError("preprocess_stimuli: target size must be positive");
  if (norm.mean.size() != Image::kChannels || norm.std.size() != Image::kChannels) {
    throw ConfigError("preprocess_stimuli: normalisation needs three channels");
  }
  const std::size_t plane = target * target;
  Tensor out = Tensor::zeros({set.size(), Image::kChannels, target, target});
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Image img = resize_bilinear(set.images[i], target, target);
    for (std::size_t c = 0; c < Image::kChannels; ++c) {
      const double* src = img.data.data() + c * plane;
      double* dst = out.data.data() + (i * Image::kChannels + c) * plane;
      for (std::size_t p = 0; p < plane; ++p) dst[p] = (src[p] - norm.mean[c]) / norm.std[c];
    }
  }
  return out;
}

FeatureMatrix extract_features(const Checkpoint& ckpt, const StimulusSet& set, const std::string& layer,
                               std::size_t target, std::size_t batch_size) {
  set.validate();
  if (set.size() == 0) throw ConfigError("extract_features: empty stimulus set");
  if (batch_size == 0) throw ConfigError("extract_features: batch size must be positive");
  const std::size_t l = ckpt.spec.layer_index(layer);
  if (!ckpt.has_fc1 && l >= ckpt.spec.fc1_index()) {
    throw ConfigError("cannot extract " + layer + ": checkpoint (rule " + std::string(to_string(ckpt.rule)) +
                      ", seed " + std::to_string(ckpt.seed) +
                      ") has no FC1 weights; conv-only STDP checkpoints such as seed 0 support conv layers only");
  }
  const bool logits = l + 1 == ckpt.spec.n_layers();

  std::vector<double> values;
  std::size_t width = 0;
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    StimulusSet chunk;
    const std::size_t end = std::min(set.size(), start + batch_size);
    chunk.stimulus_ids.assign(set.stimulus_ids.begin() + static_cast<std::ptrdiff_t>(start),
                              set.stimulus_ids.begin() + static_cast<std::ptrdiff_t>(end));
    chunk.images.assign(set.images.begin() + static_cast<std::ptrdiff_t>(start),
                        set.images.begin() + static_cast<std::ptrdiff_t>(end));
    const Tensor images = preprocess_stimuli(chunk, target, ckpt.normalization);
    auto result = forward(ckpt, images, layer);
    const Tensor& act = logits ? result.logits : result.activations.at(layer);
    width = act.size() / act.dim(0);
    values.insert(values.end(), act.data.begin(), act.data.end());
  }
  FeatureMatrix fm;
  fm.stimulus_ids = set.stimulus_ids;
  fm.features = Matrix(set.size(), width, std::move(values));
  fm.provenance = {std::string(to_string(ckpt.rule)), static_cast<long long>(ckpt.seed), layer};
  return fm;
}

void export_features(const FeatureMatrix& fm, const std::filesystem::path& path, FileEncoding encoding) {
  fm.validate();
  if (fm.provenance.condition.empty() || fm.provenance.layer.empty()) {
    throw ConfigError("export_features: model and layer labels are required");
  }
  io::require_plain_label(fm.provenance.condition, "model label");
  io::require_plain_label(fm.provenance.layer, "layer label");
  const std::size_t m = fm.n_stimuli(), k = fm.n_features();
  if (encoding == FileEncoding::binary) {
    io::Container c;
    c.format = std::string(kFeatureFormat);
    c.metadata = {{"model", fm.provenance.condition},
                  {"layer", fm.provenance.layer},
                  {"seed", std::to_string(fm.provenance.seed)}};
    c.tables = {{"stimuli", fm.stimulus_ids}};
    c.tensors.push_back({"features", {m, k}, fm.features.data()});
    io::write_container(c, path);
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << "[header]\nformat," << kFeatureFormat << "\nmodel," << fm.provenance.condition << "\nlayer,"
      << fm.provenance.layer << "\nseed," << fm.provenance.seed << "\nn_stimuli," << m << "\nn_features," << k
      << "\n[stimuli]\nindex,id\n";
  for (std::size_t i = 0; i < m; ++i) out << i << ',' << fm.stimulus_ids[i] << '\n';
  out << "[features]\n";
  for (std::size_t i = 0; i < m; ++i) {
    out << i;
    for (double v : fm.features.row(i)) out << ',' << io::format_double(v);
    out << '\n';
  }
  if (!out) throw DataError("error writing '" + path.string() + "'");
}

namespace {

FeatureMatrix import_binary(const std::filesystem::path& path) {
  const auto c = io::read_container(path, kFeatureFormat);
  FeatureMatrix fm;
  fm.provenance.condition = c.meta("model");
  fm.provenance.layer = c.meta("layer");
  fm.provenance.seed = io::parse_int(c.meta("seed"), path.string() + " seed");
  fm.stimulus_ids = c.table("stimuli");
  const auto* t = c.find_tensor("features");
  if (!t || t->shape.size() != 2) throw DataError(path.string() + ": missing 2-D tensor 'features'");
  if (t->shape[0] != fm.stimulus_ids.size()) {
    throw DataError(path.string() + ": feature rows (" + std::to_string(t->shape[0]) + ") do not match " +
                    std::to_string(fm.stimulus_ids.size()) + " stimuli");
  }
  fm.features = Matrix(t->shape[0], t->shape[1], t->values);
  return fm;
}

FeatureMatrix import_text(const std::filesystem::path& path) {
  const auto sections = io::read_sections(path);
  const auto header = io::key_values(io::find_section(sections, "header", path), path);
  const auto field = [&](const std::string& key) {
    const auto it = header.find(key);
    if (it == header.end() || it->second.empty()) {
      throw DataError(path.string() + ": header missing '" + key + "'");
    }
    return it->second;
  };
  if (field("format") != kFeatureFormat) {
    throw DataError(path.string() + ": expected format " + std::string(kFeatureFormat));
  }
  FeatureMatrix fm;
  fm.provenance.condition = field("model");
  fm.provenance.layer = field("layer");
  fm.provenance.seed = io::parse_int(field("seed"), path.string() + " seed");
  const auto m = io::parse_count(header, "n_stimuli", path);
  const auto k = io::parse_count(header, "n_features", path);
  fm.stimulus_ids = io::read_id_table(io::find_section(sections, "stimuli", path), m, path);

  const auto& rows = io::find_section(sections, "features", path);
  if (rows.rows.size() != m) {
    throw DataError(path.string() + ": [features] has " + std::to_string(rows.rows.size()) + " rows, header says " +
                    std::to_string(m));
  }
  std::vector<double> values;
  values.reserve(m * k);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& row = rows.rows[i];
    const auto where = path.string() + ":" + std::to_string(rows.first_line + i);
    if (row.size() != k + 1) throw DataError(where + ": expected index plus " + std::to_string(k) + " values");
    if (io::parse_int(row[0], where) != static_cast<long long>(i)) throw DataError(where + ": rows must be in index order");
    for (std::size_t j = 0; j < k; ++j) values.push_back(io::parse_double(row[j + 1], where));
  }
  fm.features = Matrix(m, k, std::move(values));
  return fm;
}

}  // namespace

FeatureMatrix import_external_features(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("feature file not found: " + path.string());
  FeatureMatrix fm = io::has_binary_magic(path, kFeatureFormat) ? import_binary(path) : import_text(path);
  try {
    fm.validate();
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return fm;
}

}  // namespace crossrsa
