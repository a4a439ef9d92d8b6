#include "crossrsa/results_io.hpp"

#include <fstream>

#include "crossrsa/error.hpp"
#include "json.hpp"

namespace crossrsa {

using nlohmann::ordered_json;

namespace {

template <typename T>
T field(const ordered_json& j, const char* key, std::string_view context) {
  const auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string(context) + ": missing field '" + key + "'");
  try {
    return it->template get<T>();
  } catch (const ordered_json::exception&) {
    throw DataError(std::string(context) + ": field '" + key + "' has the wrong type");
  }
}

ordered_json parse_line(std::string_view line, std::string_view format, std::string_view context) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const ordered_json::parse_error& e) {
    throw DataError(std::string(context) + ": invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw DataError(std::string(context) + ": expected a JSON object");
  if (field<std::string>(j, "format", context) != format) {
    throw DataError(std::string(context) + ": expected format " + std::string(format));
  }
  return j;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

void write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path, bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw DataError("error writing '" + path.string() + "'");
}

}  // namespace

std::string result_to_json_line(const RsaResult& r) {
  r.validate();
  ordered_json j;
  j["format"] = kResultsFormat;
  j["condition"] = r.condition;
  j["seed"] = r.seed;
  j["layer"] = r.layer;
  j["region"] = r.region;
  j["species"] = r.species;
  j["stimulus_set"] = r.stimulus_set;
  j["rho"] = r.rho;
  if (r.ci) {
    j["ci"] = {{"lower", r.ci->lower},         {"upper", r.ci->upper}, {"alpha", r.ci->alpha},
               {"n_resamples", r.ci->n_resamples}, {"seed", r.ci->seed},   {"n_redraws", r.ci->n_redraws}};
  } else {
    j["ci"] = nullptr;
  }
  j["provenance"] = r.provenance;
  j["has_fc1"] = r.has_fc1;
  return j.dump();
}

RsaResult result_from_json_line(std::string_view line, std::string_view context) {
  const auto j = parse_line(line, kResultsFormat, context);
  RsaResult r;
  r.condition = field<std::string>(j, "condition", context);
  r.seed = field<long long>(j, "seed", context);
  r.layer = field<std::string>(j, "layer", context);
  r.region = field<std::string>(j, "region", context);
  r.species = field<std::string>(j, "species", context);
  r.stimulus_set = j.value("stimulus_set", std::string());
  r.rho = field<double>(j, "rho", context);
  if (const auto it = j.find("ci"); it != j.end() && !it->is_null()) {
    BootstrapCI ci;
    ci.point = r.rho;
    ci.lower = field<double>(*it, "lower", context);
    ci.upper = field<double>(*it, "upper", context);
    ci.alpha = field<double>(*it, "alpha", context);
    ci.n_resamples = field<std::size_t>(*it, "n_resamples", context);
    ci.seed = field<std::uint64_t>(*it, "seed", context);
    ci.n_redraws = it->value("n_redraws", std::size_t{0});
    r.ci = ci;
  }
  r.provenance = j.value("provenance", std::string("computed"));
  r.has_fc1 = j.value("has_fc1", true);
  try {
    r.validate();
  } catch (const DataError& e) {
    throw DataError(std::string(context) + ": " + e.what());
  }
  return r;
}

void write_results(const std::vector<RsaResult>& results, const std::filesystem::path& path) {
  std::vector<std::string> lines;
  for (const auto& r : results) lines.push_back(result_to_json_line(r));
  write_lines(lines, path, false);
}

void append_results(const std::vector<RsaResult>& results, const std::filesystem::path& path) {
  std::vector<std::string> lines;
  for (const auto& r : results) lines.push_back(result_to_json_line(r));
  write_lines(lines, path, true);
}

std::vector<RsaResult> read_results(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<RsaResult> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    out.push_back(result_from_json_line(lines[i], path.string() + ":" + std::to_string(i + 1)));
  }
  return out;
}

void write_ceilings(const std::vector<CeilingRecord>& records, const std::filesystem::path& path) {
  std::vector<std::string> lines;
  for (const auto& rec : records) {
    ordered_json j;
    j["format"] = kCeilingFormat;
    j["species"] = rec.species;
    j["region"] = rec.region;
    j["stimulus_set"] = rec.stimulus_set;
    j["mean_corrected"] = rec.ceiling.mean_corrected;
    j["std_corrected"] = rec.ceiling.std_corrected;
    j["n_splits"] = rec.ceiling.n_splits;
    j["n_used"] = rec.ceiling.n_used;
    j["seed"] = rec.ceiling.seed;
    j["warnings"] = rec.ceiling.warnings;
    lines.push_back(j.dump());
  }
  write_lines(lines, path, false);
}

std::vector<CeilingRecord> read_ceilings(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<CeilingRecord> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const auto context = path.string() + ":" + std::to_string(i + 1);
    const auto j = parse_line(lines[i], kCeilingFormat, context);
    CeilingRecord rec;
    rec.species = field<std::string>(j, "species", context);
    rec.region = field<std::string>(j, "region", context);
    rec.stimulus_set = j.value("stimulus_set", std::string());
    rec.ceiling.mean_corrected = field<double>(j, "mean_corrected", context);
    rec.ceiling.std_corrected = field<double>(j, "std_corrected", context);
    rec.ceiling.n_splits = field<std::size_t>(j, "n_splits", context);
    rec.ceiling.n_used = field<std::size_t>(j, "n_used", context);
    rec.ceiling.seed = field<std::uint64_t>(j, "seed", context);
    rec.ceiling.warnings = j.value("warnings", std::vector<std::string>{});
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace crossrsa
