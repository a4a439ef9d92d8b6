// crossrsa command-line driver. One subcommand per pipeline stage; every
// command reads and writes plain files so runs can be diffed and resumed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crossrsa/cross_species.hpp"
#include "crossrsa/error.hpp"
#include "crossrsa/features.hpp"
#include "crossrsa/io.hpp"
#include "crossrsa/learnrules.hpp"
#include "crossrsa/neuro.hpp"
#include "crossrsa/rdm.hpp"
#include "crossrsa/report.hpp"
#include "crossrsa/resample.hpp"
#include "crossrsa/results_io.hpp"
#include "crossrsa/toy_data.hpp"

namespace fs = std::filesystem;
using namespace crossrsa;

namespace {

// Output files may name directories that do not exist yet.
const std::string& make_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  return path;
}

// "0..4", "0,2,3" or "7".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const auto lo = io::parse_int(text.substr(0, dots), "--seeds");
    const auto hi = io::parse_int(text.substr(dots + 2), "--seeds");
    if (lo < 0 || hi < lo) throw ConfigError("--seeds range '" + text + "' is empty or negative");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    return seeds;
  }
  for (const auto& item : io::split_list(text)) {
    const auto v = io::parse_int(item, "--seeds");
    if (v < 0) throw ConfigError("--seeds entries must be non-negative");
    seeds.push_back(static_cast<std::uint64_t>(v));
  }
  if (seeds.empty()) throw ConfigError("--seeds is empty");
  return seeds;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  for (const auto& item : io::split_list(text)) {
    const auto v = io::parse_int(item, flag);
    if (v <= 0) throw ConfigError(std::string(flag) + " entries must be positive");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

FileEncoding parse_encoding(const std::string& text) {
  if (text == "text") return FileEncoding::text;
  if (text == "binary") return FileEncoding::binary;
  throw ConfigError("unknown encoding '" + text + "' (expected text or binary)");
}

std::string extension(TableFormat f) { return f == TableFormat::csv ? ".csv" : ".jsonl"; }

// Reorders model rows to the neural stimulus order.
FeatureMatrix align_to(const FeatureMatrix& model, const std::vector<std::string>& ids) {
  if (model.stimulus_ids == ids) return model;
  std::map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < model.stimulus_ids.size(); ++i) where[model.stimulus_ids[i]] = i;
  FeatureMatrix out;
  out.provenance = model.provenance;
  out.stimulus_ids = ids;
  out.features = Matrix(ids.size(), model.n_features());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = where.find(ids[i]);
    if (it == where.end()) throw DataError("model features have no row for neural stimulus '" + ids[i] + "'");
    const auto src = model.features.row(it->second);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
  }
  return out;
}

// --- train ---------------------------------------------------------------------------

struct TrainArgs {
  std::string rule = "bp";
  std::string seeds = "0";
  std::size_t epochs = 40;
  double lr = 0.01;
  std::size_t batch = 64;
  std::vector<std::string> data;
  std::size_t limit = 0;
  std::string out;
  std::uint64_t fa_seed = 1;
  std::size_t pc_steps = 20;
  double pc_rate = 0.1;
  StdpParams stdp;
  std::size_t stdp_epochs = 1;
  bool conv_only = false;
  std::string conv_widths = "32,64,128";
  std::string fc_widths = "512,10";
  std::size_t input_size = 32;
  std::string log;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train", "train a network under one learning rule");
  c->add_option("--rule", a.rule, "bp|fa|pc|stdp|random")->capture_default_str();
  c->add_option("--seeds,--seed", a.seeds, "seed, list (0,2) or range (0..4)")->capture_default_str();
  c->add_option("--epochs", a.epochs)->capture_default_str();
  c->add_option("--lr", a.lr, "SGD learning rate")->capture_default_str();
  c->add_option("--batch-size", a.batch)->capture_default_str();
  c->add_option("--data", a.data, "CIFAR-10 binary batch files or one PNG class directory")->required();
  c->add_option("--limit", a.limit, "use only the first N images (0 = all)")->capture_default_str();
  c->add_option("--out", a.out, "checkpoint file (one seed) or directory")->required();
  c->add_option("--fa-feedback-seed", a.fa_seed)->capture_default_str();
  c->add_option("--pc-steps", a.pc_steps)->capture_default_str();
  c->add_option("--pc-rate", a.pc_rate)->capture_default_str();
  c->add_option("--stdp-tau-plus", a.stdp.tau_plus)->capture_default_str();
  c->add_option("--stdp-tau-minus", a.stdp.tau_minus)->capture_default_str();
  c->add_option("--stdp-a-plus", a.stdp.a_plus)->capture_default_str();
  c->add_option("--stdp-a-minus", a.stdp.a_minus)->capture_default_str();
  c->add_option("--stdp-steps", a.stdp.time_steps)->capture_default_str();
  c->add_option("--stdp-epochs", a.stdp_epochs, "unsupervised passes per conv layer")->capture_default_str();
  c->add_flag("--conv-only", a.conv_only, "STDP: store conv weights only (no FC1)");
  c->add_option("--conv-widths", a.conv_widths)->capture_default_str();
  c->add_option("--fc-widths", a.fc_widths)->capture_default_str();
  c->add_option("--input-size", a.input_size)->capture_default_str();
  c->add_option("--log", a.log, "write per-epoch loss/accuracy CSV here");
}

int run_train(const TrainArgs& a) {
  TrainingConfig cfg;
  cfg.rule = parse_learning_rule(a.rule);
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch;
  cfg.fa_feedback_seed = a.fa_seed;
  cfg.pc = {a.pc_steps, a.pc_rate};
  cfg.stdp = a.stdp;
  cfg.stdp_epochs = a.stdp_epochs;
  cfg.keep_fc1 = !a.conv_only;
  cfg.spec.conv_widths = parse_sizes(a.conv_widths, "--conv-widths");
  cfg.spec.fc_widths = parse_sizes(a.fc_widths, "--fc-widths");
  cfg.spec.input_size = a.input_size;

  std::vector<fs::path> paths(a.data.begin(), a.data.end());
  const ImageDataset data = load_image_dataset(paths, a.limit);
  const auto seeds = parse_seeds(a.seeds);
  const bool to_dir = seeds.size() > 1 || fs::is_directory(a.out) || a.out.ends_with('/');
  if (to_dir) fs::create_directories(a.out);

  std::ofstream log;
  if (!a.log.empty()) {
    log.open(make_parent(a.log));
    if (!log) throw DataError("cannot open '" + a.log + "' for writing");
    log << "rule,seed,epoch,loss,accuracy\n";
  }
  for (const auto seed : seeds) {
    cfg.seed = seed;
    const auto result = train(cfg, data);
    const fs::path out = to_dir ? fs::path(a.out) / (a.rule + "_seed" + std::to_string(seed) + ".ckpt") : fs::path(a.out);
    if (!to_dir) make_parent(a.out);
    save_checkpoint(result.checkpoint, out);
    for (const auto& m : result.history) {
      if (log) {
        log << to_string(cfg.rule) << ',' << seed << ',' << m.epoch << ',' << io::format_double(m.loss) << ','
            << io::format_double(m.accuracy) << '\n';
      }
    }
    std::cout << to_string(cfg.rule) << " seed " << seed << ": " << result.history.size() << " epochs";
    if (!result.history.empty()) {
      std::cout << ", final loss " << result.history.back().loss << ", accuracy " << result.history.back().accuracy;
    }
    std::cout << " -> " << out.string() << '\n';
  }
  return 0;
}

// --- extract -------------------------------------------------------------------------

struct ExtractArgs {
  std::string ckpt, stimuli, layer, out, encoding = "binary", model;
  std::size_t size = kStimulusSize;
  std::size_t batch = 16;
};

void add_extract(CLI::App& app, ExtractArgs& a) {
  auto* c = app.add_subcommand("extract", "write layer features for a stimulus set");
  c->add_option("--ckpt", a.ckpt)->required();
  c->add_option("--stimuli", a.stimuli, "stimulus manifest")->required();
  c->add_option("--layer", a.layer, "Conv1, Conv2, Conv3, FC1, ...")->required();
  c->add_option("--out", a.out)->required();
  c->add_option("--size", a.size, "stimulus resize target")->capture_default_str();
  c->add_option("--batch-size", a.batch)->capture_default_str();
  c->add_option("--encoding", a.encoding, "binary|text")->capture_default_str();
  c->add_option("--model", a.model, "model label stored in the file (default: rule label)");
}

int run_extract(const ExtractArgs& a) {
  const auto ckpt = load_checkpoint(a.ckpt);
  auto fm = extract_features(ckpt, load_stimulus_set(a.stimuli), a.layer, a.size, a.batch);
  if (!a.model.empty()) fm.provenance.condition = a.model;
  export_features(fm, make_parent(a.out), parse_encoding(a.encoding));
  std::cout << a.layer << ": " << fm.n_stimuli() << " x " << fm.n_features() << " -> " << a.out << '\n';
  return 0;
}

// --- score ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string neural;
  std::vector<std::string> features, ckpts;
  std::string stimuli, layer, layer_map, model_neural, stimulus_set, out;
  std::size_t n_boot = kDefaultBootstrapResamples;
  double alpha = kDefaultAlpha;
  std::uint64_t seed = 0;
  std::size_t size = kStimulusSize;
  bool append = false;
};

void add_score(CLI::App& app, ScoreArgs& a) {
  auto* c = app.add_subcommand("score", "RSA of model features against a neural dataset");
  c->add_option("--neural", a.neural, "neural dataset (crossrsa-neuro/1)")->required();
  c->add_option("--features", a.features, "feature files (crossrsa-feat/1)");
  c->add_option("--ckpt", a.ckpts, "checkpoints to extract from (needs --stimuli)");
  c->add_option("--stimuli", a.stimuli, "stimulus manifest for --ckpt");
  c->add_option("--layer", a.layer, "layer for --ckpt (default: from the layer map)");
  c->add_option("--layer-map", a.layer_map, "override, e.g. Conv1:V1,Conv2:V4,FC1:IT");
  c->add_option("--model-neural", a.model_neural, "use another neural dataset as the model");
  c->add_option("--stimulus-set", a.stimulus_set, "stimulus-set label recorded with each result");
  c->add_option("--n-boot", a.n_boot, "bootstrap resamples (0 = no CI)")->capture_default_str();
  c->add_option("--alpha", a.alpha)->capture_default_str();
  c->add_option("--seed", a.seed, "bootstrap seed")->capture_default_str();
  c->add_option("--size", a.size, "stimulus resize target for --ckpt")->capture_default_str();
  c->add_option("--out", a.out, "results file (JSON lines)")->required();
  c->add_flag("--append", a.append, "append to --out instead of replacing it");
}

int run_score(const ScoreArgs& a) {
  const auto neural = load_neural_dataset(a.neural);
  const auto neural_rdm = compute_rdm(average_repetitions(neural));
  const std::string species(to_string(neural.species));

  struct Model {
    FeatureMatrix features;
    bool has_fc1 = true;
    std::string provenance = "computed";
  };
  std::vector<Model> models;
  for (const auto& f : a.features) models.push_back({import_external_features(f), true, "imported-features"});
  if (!a.ckpts.empty()) {
    if (a.stimuli.empty()) throw ConfigError("--ckpt needs --stimuli");
    const auto set = load_stimulus_set(a.stimuli);
    const auto map = a.layer_map.empty() ? LayerRegionMap::defaults(neural.species) : LayerRegionMap::parse(a.layer_map);
    const std::string layer = a.layer.empty() ? map.layer_for(neural.region) : a.layer;
    for (const auto& path : a.ckpts) {
      const auto ckpt = load_checkpoint(path);
      models.push_back({extract_features(ckpt, set, layer, a.size), ckpt.has_fc1});
    }
  }
  if (!a.model_neural.empty()) {
    const auto other = load_neural_dataset(a.model_neural);
    auto fm = average_repetitions(other);
    fm.provenance = {"neural:" + std::string(to_string(other.species)), 0, other.region};
    models.push_back({fm});
  }
  if (models.empty()) throw ConfigError("nothing to score: give --features, --ckpt or --model-neural");

  std::vector<RsaResult> results;
  for (const auto& m : models) {
    const auto model_rdm = compute_rdm(align_to(m.features, neural.stimulus_ids));
    RsaResult r;
    r.rho = rsa_score(model_rdm, neural_rdm);
    if (a.n_boot > 0) r.ci = bootstrap_rsa(model_rdm, neural_rdm, {a.n_boot, a.seed, a.alpha});
    r.condition = m.features.provenance.condition;
    r.seed = m.features.provenance.seed;
    r.layer = m.features.provenance.layer;
    r.region = neural.region;
    r.species = species;
    r.stimulus_set = a.stimulus_set;
    r.provenance = m.provenance;
    r.has_fc1 = m.has_fc1;
    std::cout << r.condition << " seed " << r.seed << " " << r.layer << " vs " << species << " " << r.region
              << ": rho = " << io::format_double(r.rho);
    if (r.ci) std::cout << " [" << io::format_double(r.ci->lower) << ", " << io::format_double(r.ci->upper) << "]";
    std::cout << '\n';
    results.push_back(std::move(r));
  }
  if (a.append) {
    append_results(results, make_parent(a.out));
  } else {
    write_results(results, make_parent(a.out));
  }
  return 0;
}

// --- ceiling -------------------------------------------------------------------------

struct CeilingArgs {
  std::vector<std::string> neural;
  std::size_t n_splits = kDefaultSplitHalfSplits;
  std::uint64_t seed = 0;
  std::string stimulus_set, out;
};

void add_ceiling(CLI::App& app, CeilingArgs& a) {
  auto* c = app.add_subcommand("ceiling", "split-half noise ceiling per neural dataset");
  c->add_option("--neural", a.neural)->required();
  c->add_option("--n-splits", a.n_splits)->capture_default_str();
  c->add_option("--seed", a.seed)->capture_default_str();
  c->add_option("--stimulus-set", a.stimulus_set);
  c->add_option("--out", a.out, "ceiling records (JSON lines)")->required();
}

int run_ceiling(const CeilingArgs& a) {
  std::vector<CeilingRecord> records;
  for (const auto& path : a.neural) {
    const auto data = load_neural_dataset(path);
    CeilingRecord rec{std::string(to_string(data.species)), data.region, a.stimulus_set,
                      split_half_ceiling(data, {a.n_splits, a.seed, DistanceMetric::correlation})};
    for (const auto& w : rec.ceiling.warnings) std::cerr << "warning: " << path << ": " << w << '\n';
    std::cout << rec.species << " " << rec.region << ": ceiling " << io::format_double(rec.ceiling.mean_corrected)
              << " +/- " << io::format_double(rec.ceiling.std_corrected) << " (" << rec.ceiling.n_used << "/"
              << rec.ceiling.n_splits << " splits)\n";
    records.push_back(std::move(rec));
  }
  write_ceilings(records, make_parent(a.out));
  return 0;
}

// --- compare / stimcontrol / report -------------------------------------------------------

std::vector<RsaResult> read_all_results(const std::vector<std::string>& paths) {
  std::vector<RsaResult> all;
  for (const auto& p : paths) {
    auto r = read_results(p);
    all.insert(all.end(), r.begin(), r.end());
  }
  return all;
}

void print_ranking(const std::vector<RankingComparison>& comps) {
  std::cout << "region  tau      p_two    p_one\n";
  for (const auto& c : comps) {
    char line[96];
    std::snprintf(line, sizeof line, "%-6s  %+.3f   %.4f   %.4f\n", c.region.c_str(), c.tau, c.p_two_sided,
                  c.p_one_sided);
    std::cout << line;
  }
}

struct CompareArgs {
  std::vector<std::string> results;
  std::string human = "human", macaque = "macaque", human_set, macaque_set, out, format = "csv";
};

void add_compare(CLI::App& app, CompareArgs& a) {
  auto* c = app.add_subcommand("compare", "ranking, invariance and interaction tables across species");
  c->add_option("--results", a.results)->required();
  c->add_option("--human-species", a.human)->capture_default_str();
  c->add_option("--macaque-species", a.macaque)->capture_default_str();
  c->add_option("--human-set", a.human_set, "restrict the human side to one stimulus set");
  c->add_option("--macaque-set", a.macaque_set, "restrict the macaque side to one stimulus set");
  c->add_option("--out", a.out, "output directory")->required();
  c->add_option("--format", a.format, "csv|jsonl")->capture_default_str();
}

int run_compare(const CompareArgs& a) {
  const auto format = parse_table_format(a.format);
  const auto aggs = aggregate_all(read_all_results(a.results));
  const auto human = region_rhos(aggs, a.human, a.human_set);
  const auto macaque = region_rhos(aggs, a.macaque, a.macaque_set);
  const auto ranking = compare_regions(human, macaque, a.human, a.macaque);
  if (ranking.empty()) throw DataError("no region is scored for both " + a.human + " and " + a.macaque);
  fs::create_directories(a.out);
  const fs::path out(a.out);
  write_table(aggregate_table(aggs), out / ("aggregates" + extension(format)), format);
  write_table(ranking_table(ranking), out / ("ranking" + extension(format)), format);
  write_table(invariance_table({{a.human, human}, {a.macaque, macaque}}), out / ("invariance" + extension(format)),
              format);
  try {
    write_table(interaction_table(interaction_effects(human, macaque)), out / ("interaction" + extension(format)),
                format);
  } catch (const ConfigError& e) {
    std::cerr << "warning: interaction table skipped: " << e.what() << '\n';
  }
  print_ranking(ranking);
  return 0;
}

struct StimcontrolArgs {
  std::vector<std::string> results;
  std::string set_a, set_b, species, out, format = "csv";
};

void add_stimcontrol(CLI::App& app, StimcontrolArgs& a) {
  auto* c = app.add_subcommand("stimcontrol", "ranking agreement across stimulus sets");
  c->add_option("--results", a.results)->required();
  c->add_option("--set-a", a.set_a)->required();
  c->add_option("--set-b", a.set_b)->required();
  c->add_option("--species", a.species, "restrict to one species (default: any)");
  c->add_option("--out", a.out, "output directory")->required();
  c->add_option("--format", a.format, "csv|jsonl")->capture_default_str();
}

int run_stimcontrol(const StimcontrolArgs& a) {
  const auto format = parse_table_format(a.format);
  const auto aggs = aggregate_all(read_all_results(a.results));
  const auto comps =
      compare_regions(region_rhos(aggs, a.species, a.set_a), region_rhos(aggs, a.species, a.set_b), a.set_a, a.set_b);
  if (comps.empty()) throw DataError("no region is scored on both stimulus sets '" + a.set_a + "' and '" + a.set_b + "'");
  fs::create_directories(a.out);
  write_table(ranking_table(comps), fs::path(a.out) / ("stimulus_control" + extension(format)), format);
  print_ranking(comps);
  return 0;
}

struct ReportArgs {
  std::vector<std::string> results, ceilings;
  ReportOptions options;
  std::string out;
};

void add_report(CLI::App& app, ReportArgs& a) {
  auto* c = app.add_subcommand("report", "figure CSVs and SVGs from results files");
  c->add_option("--results", a.results)->required();
  c->add_option("--ceilings", a.ceilings, "ceiling records for the hierarchy figure");
  c->add_option("--human-species", a.options.human_species)->capture_default_str();
  c->add_option("--macaque-species", a.options.macaque_species)->capture_default_str();
  c->add_option("--human-set", a.options.human_set);
  c->add_option("--macaque-set", a.options.macaque_set);
  c->add_option("--control-set-a", a.options.control_set_a);
  c->add_option("--control-set-b", a.options.control_set_b);
  c->add_option("--out", a.out, "output directory")->required();
}

int run_report(const ReportArgs& a) {
  std::vector<CeilingRecord> ceilings;
  for (const auto& p : a.ceilings) {
    auto c = read_ceilings(p);
    ceilings.insert(ceilings.end(), c.begin(), c.end());
  }
  for (const auto& f : write_report(read_all_results(a.results), ceilings, a.options, a.out)) {
    std::cout << (fs::path(a.out) / f).string() << '\n';
  }
  return 0;
}

// --- synthetic data helpers ----------------------------------------------------------------

struct SynthArgs {
  std::string features, ckpt, stimuli, layer, out, encoding = "text";
  std::string region = "synthetic", species = "synthetic";
  double snr = 10.0;
  std::size_t n_neurons = 100, n_reps = 1, size = kStimulusSize;
  std::uint64_t seed = 0;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* c = app.add_subcommand("synth", "synthetic neural data as noisy linear readouts of model features");
  c->add_option("--features", a.features, "source feature file");
  c->add_option("--ckpt", a.ckpt, "or: checkpoint + --stimuli + --layer");
  c->add_option("--stimuli", a.stimuli);
  c->add_option("--layer", a.layer);
  c->add_option("--snr", a.snr, "signal variance / noise variance")->capture_default_str();
  c->add_option("--n-neurons", a.n_neurons)->capture_default_str();
  c->add_option("--n-reps", a.n_reps)->capture_default_str();
  c->add_option("--seed", a.seed)->capture_default_str();
  c->add_option("--region", a.region)->capture_default_str();
  c->add_option("--species", a.species, "human|macaque|synthetic")->capture_default_str();
  c->add_option("--size", a.size)->capture_default_str();
  c->add_option("--out", a.out)->required();
  c->add_option("--encoding", a.encoding, "text|binary")->capture_default_str();
}

int run_synth(const SynthArgs& a) {
  FeatureMatrix source;
  if (!a.features.empty()) {
    source = import_external_features(a.features);
  } else if (!a.ckpt.empty() && !a.stimuli.empty() && !a.layer.empty()) {
    source = extract_features(load_checkpoint(a.ckpt), load_stimulus_set(a.stimuli), a.layer, a.size);
  } else {
    throw ConfigError("synth needs --features, or --ckpt with --stimuli and --layer");
  }
  SyntheticSpec spec{source.provenance.layer, a.snr, a.n_neurons, a.n_reps, a.seed, a.region};
  auto data = generate_synthetic(spec, source);
  data.species = parse_species(a.species);
  save_neural_dataset(data, make_parent(a.out), parse_encoding(a.encoding));
  std::cout << data.n_stimuli() << " stimuli x " << data.n_neurons() << " neurons x " << data.n_repetitions
            << " repetitions -> " << a.out << '\n';
  return 0;
}

struct ToyArgs {
  std::size_t n = 200, size = 32, classes = 10;
  std::uint64_t seed = 0;
  std::string out;
};

void add_toy(CLI::App& app, ToyArgs& images, ToyArgs& stimuli) {
  auto* c = app.add_subcommand("make-images", "toy labelled training images in CIFAR-10 binary layout");
  c->add_option("--n", images.n)->capture_default_str();
  c->add_option("--classes", images.classes)->capture_default_str();
  c->add_option("--seed", images.seed)->capture_default_str();
  c->add_option("--out", images.out)->required();
  auto* s = app.add_subcommand("make-stimuli", "toy stimulus set (manifest + PNGs)");
  stimuli.n = 40;
  stimuli.size = 64;
  s->add_option("--n", stimuli.n)->capture_default_str();
  s->add_option("--size", stimuli.size)->capture_default_str();
  s->add_option("--seed", stimuli.seed)->capture_default_str();
  s->add_option("--out", stimuli.out, "manifest path; images go next to it")->required();
}

int dispatch(CLI::App& app, int argc, char** argv) {
  TrainArgs train_args;
  ExtractArgs extract_args;
  ScoreArgs score_args;
  CeilingArgs ceiling_args;
  CompareArgs compare_args;
  StimcontrolArgs stim_args;
  ReportArgs report_args;
  SynthArgs synth_args;
  ToyArgs images_args, stimuli_args;
  add_train(app, train_args);
  add_extract(app, extract_args);
  add_score(app, score_args);
  add_ceiling(app, ceiling_args);
  add_compare(app, compare_args);
  add_stimcontrol(app, stim_args);
  add_report(app, report_args);
  add_synth(app, synth_args);
  add_toy(app, images_args, stimuli_args);
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorClass::config);
  }

  const auto* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  if (name == "train") return run_train(train_args);
  if (name == "extract") return run_extract(extract_args);
  if (name == "score") return run_score(score_args);
  if (name == "ceiling") return run_ceiling(ceiling_args);
  if (name == "compare") return run_compare(compare_args);
  if (name == "stimcontrol") return run_stimcontrol(stim_args);
  if (name == "report") return run_report(report_args);
  if (name == "synth") return run_synth(synth_args);
  if (name == "make-images") {
    save_cifar_binary(make_toy_images(images_args.n, 32, images_args.classes, images_args.seed), make_parent(images_args.out));
    return 0;
  }
  if (name == "make-stimuli") {
    const auto manifest = fs::path(stimuli_args.out);
    if (manifest.has_parent_path()) fs::create_directories(manifest.parent_path());
    save_stimulus_set(make_toy_stimuli(stimuli_args.n, stimuli_args.size, stimuli_args.seed), manifest);
    return 0;
  }
  return static_cast<int>(ErrorClass::config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crossrsa: cross-species representational similarity analysis"};
  app.set_config("--config", "", "TOML/INI file with flag defaults ([subcommand] sections); command-line flags win");
  try {
    return dispatch(app, argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.error_class());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorClass::data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
