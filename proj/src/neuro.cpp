#include "crossrsa/neuro.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <tuple>
#include <unordered_set>

#include "crossrsa/error.hpp"
#include "crossrsa/io.hpp"
#include "crossrsa/rng.hpp"

namespace crossrsa {

std::string_view to_string(Species species) {
  switch (species) {
    case Species::human:
      return "human";
    case Species::macaque:
      return "macaque";
    case Species::synthetic:
      return "synthetic";
  }
  return "unknown";
}

Species parse_species(std::string_view text) {
  if (text == "human") return Species::human;
  if (text == "macaque") return Species::macaque;
  if (text == "synthetic") return Species::synthetic;
  throw DataError("unknown species '" + std::string(text) + "'");
}

NeuralDataset NeuralDataset::empty(Species species, std::string region, std::vector<std::string> stimulus_ids,
                                   std::vector<std::string> neuron_ids, std::size_t n_repetitions) {
  NeuralDataset d;
  d.species = species;
  d.region = std::move(region);
  d.stimulus_ids = std::move(stimulus_ids);
  d.neuron_ids = std::move(neuron_ids);
  d.n_repetitions = n_repetitions;
  d.responses.assign(d.n_stimuli() * d.n_neurons() * n_repetitions, std::nan(""));
  return d;
}

std::vector<std::size_t> NeuralDataset::repetition_counts() const {
  std::vector<std::size_t> counts(n_stimuli(), 0);
  for (std::size_t s = 0; s < n_stimuli(); ++s) {
    for (std::size_t n = 0; n < n_neurons(); ++n) {
      std::size_t valid = 0;
      for (std::size_t r = 0; r < n_repetitions; ++r) valid += !std::isnan(at(s, n, r));
      counts[s] = std::max(counts[s], valid);
    }
  }
  return counts;
}

namespace {

void require_unique(const std::vector<std::string>& ids, std::string_view what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    io::require_plain_label(id, what);
    if (!seen.insert(id).second) throw DataError(std::string(what) + ": duplicate ID '" + id + "'");
  }
}

}  // namespace

void NeuralDataset::validate() const {
  io::require_plain_label(region, "region");
  require_unique(stimulus_ids, "stimulus table");
  require_unique(neuron_ids, "neuron table");
  if (n_repetitions == 0) throw DataError("NeuralDataset: zero repetitions");
  if (responses.size() != n_stimuli() * n_neurons() * n_repetitions) {
    throw DataError("NeuralDataset: response array size does not match counts");
  }
  for (std::size_t s = 0; s < n_stimuli(); ++s) {
    for (std::size_t n = 0; n < n_neurons(); ++n) {
      bool any = false;
      for (std::size_t r = 0; r < n_repetitions; ++r) {
        const double v = at(s, n, r);
        if (std::isnan(v)) continue;
        if (!std::isfinite(v)) {
          throw DataError("NeuralDataset: non-finite response for stimulus '" + stimulus_ids[s] + "', neuron '" +
                          neuron_ids[n] + "'");
        }
        any = true;
      }
      if (!any) {
        throw DataError("NeuralDataset: no valid repetition for stimulus '" + stimulus_ids[s] + "', neuron '" +
                        neuron_ids[n] + "'");
      }
    }
  }
}

bool NeuralDataset::operator==(const NeuralDataset& other) const {
  if (species != other.species || region != other.region || stimulus_ids != other.stimulus_ids ||
      neuron_ids != other.neuron_ids || n_repetitions != other.n_repetitions ||
      responses.size() != other.responses.size()) {
    return false;
  }
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const double a = responses[i];
    const double b = other.responses[i];
    if (std::isnan(a) != std::isnan(b)) return false;
    if (!std::isnan(a) && a != b) return false;
  }
  return true;
}

FeatureMatrix average_repetitions(const NeuralDataset& data) {
  FeatureMatrix fm;
  fm.stimulus_ids = data.stimulus_ids;
  fm.features = Matrix(data.n_stimuli(), data.n_neurons());
  fm.provenance = {std::string(to_string(data.species)), 0, data.region};
  for (std::size_t s = 0; s < data.n_stimuli(); ++s) {
    for (std::size_t n = 0; n < data.n_neurons(); ++n) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t r = 0; r < data.n_repetitions; ++r) {
        const double v = data.at(s, n, r);
        if (std::isnan(v)) continue;
        sum += v;
        ++count;
      }
      if (count == 0) {
        throw DataError("average_repetitions: stimulus '" + data.stimulus_ids[s] + "', neuron '" + data.neuron_ids[n] +
                        "' has no valid repetition");
      }
      fm.features(s, n) = sum / static_cast<double>(count);
    }
  }
  return fm;
}

// --- file format --------------------------------------------------------------

namespace {

struct Record {
  std::size_t stimulus, neuron, repetition;
  double value;
};

NeuralDataset assemble(const std::filesystem::path& path, Species species, std::string region,
                       std::vector<std::string> stimuli, std::vector<std::string> neurons, std::size_t n_reps,
                       const std::vector<std::pair<Record, std::string>>& records) {
  auto data = NeuralDataset::empty(species, std::move(region), std::move(stimuli), std::move(neurons), n_reps);
  for (const auto& [rec, where] : records) {
    if (rec.stimulus >= data.n_stimuli() || rec.neuron >= data.n_neurons() || rec.repetition >= n_reps) {
      throw DataError(where + ": index out of range");
    }
    if (!std::isfinite(rec.value)) throw DataError(where + ": non-finite response value");
    double& slot = data.at(rec.stimulus, rec.neuron, rec.repetition);
    if (!std::isnan(slot)) {
      throw DataError(where + ": duplicate key (stimulus '" + data.stimulus_ids[rec.stimulus] + "', neuron '" +
                      data.neuron_ids[rec.neuron] + "', repetition " + std::to_string(rec.repetition) + ")");
    }
    slot = rec.value;
  }
  try {
    data.validate();
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return data;
}

NeuralDataset load_text(const std::filesystem::path& path) {
  const auto sections = io::read_sections(path);
  const auto header = io::key_values(io::find_section(sections, "header", path), path);
  const auto fmt = header.find("format");
  if (fmt == header.end() || fmt->second != kNeuroFormat) {
    throw DataError(path.string() + ": expected format " + std::string(kNeuroFormat));
  }
  const auto field = [&](const std::string& key) {
    const auto it = header.find(key);
    if (it == header.end()) throw DataError(path.string() + ": header missing '" + key + "'");
    return it->second;
  };
  const Species species = parse_species(field("species"));
  const std::string region = field("region");
  const auto n_stim = io::parse_count(header, "n_stimuli", path);
  const auto n_neur = io::parse_count(header, "n_neurons", path);
  const auto n_reps = io::parse_count(header, "n_repetitions", path);

  auto stimuli = io::read_id_table(io::find_section(sections, "stimuli", path), n_stim, path);
  auto neurons = io::read_id_table(io::find_section(sections, "neurons", path), n_neur, path);

  const auto& resp = io::find_section(sections, "responses", path);
  if (resp.rows.empty() || resp.rows[0] != std::vector<std::string>{"stimulus", "neuron", "repetition", "value"}) {
    throw DataError(path.string() + ": [responses] must start with 'stimulus,neuron,repetition,value'");
  }
  std::vector<std::pair<Record, std::string>> records;
  records.reserve(resp.rows.size());
  for (std::size_t i = 1; i < resp.rows.size(); ++i) {
    const auto& row = resp.rows[i];
    auto where = path.string() + ":" + std::to_string(resp.first_line + i);
    if (row.size() != 4) throw DataError(where + ": expected 4 fields");
    const auto s = io::parse_int(row[0], where);
    const auto n = io::parse_int(row[1], where);
    const auto r = io::parse_int(row[2], where);
    if (s < 0 || n < 0 || r < 0) throw DataError(where + ": negative index");
    records.push_back({{static_cast<std::size_t>(s), static_cast<std::size_t>(n), static_cast<std::size_t>(r),
                        io::parse_double(row[3], where)},
                       std::move(where)});
  }
  return assemble(path, species, region, std::move(stimuli), std::move(neurons), n_reps, records);
}

NeuralDataset load_binary(const std::filesystem::path& path) {
  io::BinaryReader r(path);
  r.string();  // magic, already checked
  const Species species = parse_species(r.string());
  std::string region = r.string();
  const auto n_stim = r.u64();
  const auto n_neur = r.u64();
  const auto n_reps = r.u64();
  const auto read_table = [&](std::uint64_t n, const char* what) {
    std::vector<std::string> ids;
    for (std::uint64_t i = 0; i < n; ++i) {
      if (r.u32() != i) throw DataError(path.string() + ": " + what + " table indices must be consecutive from 0");
      ids.push_back(r.string());
    }
    return ids;
  };
  auto stimuli = read_table(n_stim, "stimulus");
  auto neurons = read_table(n_neur, "neuron");
  const auto n_records = r.u64();
  std::vector<std::pair<Record, std::string>> records;
  records.reserve(n_records);
  for (std::uint64_t i = 0; i < n_records; ++i) {
    Record rec{};
    rec.stimulus = r.u32();
    rec.neuron = r.u32();
    rec.repetition = r.u32();
    rec.value = r.f64();
    records.push_back({rec, path.string() + ": record " + std::to_string(i)});
  }
  if (!r.at_end()) throw DataError(path.string() + ": trailing bytes after last record");
  return assemble(path, species, std::move(region), std::move(stimuli), std::move(neurons), n_reps, records);
}

}  // namespace

NeuralDataset load_neural_dataset(const std::filesystem::path& path) {
  if (io::has_binary_magic(path, kNeuroFormat)) return load_binary(path);
  return load_text(path);
}

void save_neural_dataset(const NeuralDataset& data, const std::filesystem::path& path, FileEncoding encoding) {
  data.validate();
  if (encoding == FileEncoding::binary) {
    io::BinaryWriter w(path);
    w.string(kNeuroFormat);
    w.string(to_string(data.species));
    w.string(data.region);
    w.u64(data.n_stimuli());
    w.u64(data.n_neurons());
    w.u64(data.n_repetitions);
    for (std::size_t i = 0; i < data.n_stimuli(); ++i) {
      w.u32(static_cast<std::uint32_t>(i));
      w.string(data.stimulus_ids[i]);
    }
    for (std::size_t i = 0; i < data.n_neurons(); ++i) {
      w.u32(static_cast<std::uint32_t>(i));
      w.string(data.neuron_ids[i]);
    }
    std::uint64_t n_records = 0;
    for (double v : data.responses) n_records += !std::isnan(v);
    w.u64(n_records);
    for (std::size_t s = 0; s < data.n_stimuli(); ++s) {
      for (std::size_t n = 0; n < data.n_neurons(); ++n) {
        for (std::size_t r = 0; r < data.n_repetitions; ++r) {
          const double v = data.at(s, n, r);
          if (std::isnan(v)) continue;
          w.u32(static_cast<std::uint32_t>(s));
          w.u32(static_cast<std::uint32_t>(n));
          w.u32(static_cast<std::uint32_t>(r));
          w.f64(v);
        }
      }
    }
    w.close();
    return;
  }

  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << "[header]\n"
      << "format," << kNeuroFormat << "\n"
      << "species," << to_string(data.species) << "\n"
      << "region," << data.region << "\n"
      << "n_stimuli," << data.n_stimuli() << "\n"
      << "n_neurons," << data.n_neurons() << "\n"
      << "n_repetitions," << data.n_repetitions << "\n"
      << "[stimuli]\nindex,id\n";
  for (std::size_t i = 0; i < data.n_stimuli(); ++i) out << i << ',' << data.stimulus_ids[i] << '\n';
  out << "[neurons]\nindex,id\n";
  for (std::size_t i = 0; i < data.n_neurons(); ++i) out << i << ',' << data.neuron_ids[i] << '\n';
  out << "[responses]\nstimulus,neuron,repetition,value\n";
  for (std::size_t s = 0; s < data.n_stimuli(); ++s) {
    for (std::size_t n = 0; n < data.n_neurons(); ++n) {
      for (std::size_t r = 0; r < data.n_repetitions; ++r) {
        const double v = data.at(s, n, r);
        if (std::isnan(v)) continue;
        out << s << ',' << n << ',' << r << ',' << io::format_double(v) << '\n';
      }
    }
  }
  if (!out) throw DataError("error writing '" + path.string() + "'");
}

// --- synthetic data ---------------------------------------------------------------

SyntheticDraw generate_synthetic_with_signal(const SyntheticSpec& spec, const FeatureMatrix& source) {
  source.validate();
  if (!(spec.snr > 0.0)) throw ConfigError("generate_synthetic: snr must be positive");
  if (spec.n_neurons == 0 || spec.n_repetitions == 0) {
    throw ConfigError("generate_synthetic: neuron and repetition counts must be >= 1");
  }
  const std::size_t m = source.n_stimuli();
  const std::size_t k = source.n_features();
  const std::size_t n_neurons = spec.n_neurons;

  // Each stimulus pattern is centred across features first, so the expected
  // correlation-distance RDM of the readouts equals the source layer's RDM
  // (raw ReLU features would make it track uncentred cosine similarity).
  Matrix centred = source.features;
  for (std::size_t s = 0; s < m; ++s) {
    auto row = centred.row(s);
    double mu = 0.0;
    for (double v : row) mu += v;
    mu /= static_cast<double>(k);
    for (double& v : row) v -= mu;
  }

  // Readout weights: one stream per neuron so the signal does not depend on
  // how many neurons are requested after it.
  Matrix signal(m, n_neurons);
  std::vector<double> weights(k);
  for (std::size_t j = 0; j < n_neurons; ++j) {
    Rng rng(spec.seed, 2 * j);
    for (auto& w : weights) w = rng.normal();
    for (std::size_t s = 0; s < m; ++s) {
      const auto row = centred.row(s);
      double acc = 0.0;
      for (std::size_t c = 0; c < k; ++c) acc += row[c] * weights[c];
      signal(s, j) = acc;
    }
  }

  std::vector<std::string> neuron_ids(n_neurons);
  for (std::size_t j = 0; j < n_neurons; ++j) neuron_ids[j] = "n" + std::to_string(j);
  const std::string region = spec.region.empty() ? spec.generator_layer : spec.region;
  auto data = NeuralDataset::empty(Species::synthetic, region, source.stimulus_ids, std::move(neuron_ids),
                                   spec.n_repetitions);

  for (std::size_t j = 0; j < n_neurons; ++j) {
    double mu = 0.0;
    for (std::size_t s = 0; s < m; ++s) mu += signal(s, j);
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t s = 0; s < m; ++s) var += (signal(s, j) - mu) * (signal(s, j) - mu);
    var /= static_cast<double>(m);
    if (!(var > 0.0)) {
      throw DegenerateInputError("generate_synthetic: source features give a constant readout for neuron " +
                                 std::to_string(j));
    }
    const double noise_sd = std::sqrt(var / spec.snr);
    Rng rng(spec.seed, 2 * j + 1);
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t r = 0; r < spec.n_repetitions; ++r) data.at(s, j, r) = signal(s, j) + noise_sd * rng.normal();
    }
  }
  return {std::move(data), std::move(signal)};
}

NeuralDataset generate_synthetic(const SyntheticSpec& spec, const FeatureMatrix& source) {
  return generate_synthetic_with_signal(spec, source).dataset;
}

}  // namespace crossrsa
