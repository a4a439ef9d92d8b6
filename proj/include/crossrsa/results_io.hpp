#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "crossrsa/cross_species.hpp"
#include "crossrsa/resample.hpp"

namespace crossrsa {

inline constexpr std::string_view kResultsFormat = "crossrsa-results/1";
inline constexpr std::string_view kCeilingFormat = "crossrsa-ceiling/1";

/// One JSON object per line; every record carries "format". Keys are written
/// in a fixed order and doubles in shortest round-trip form, so equal inputs
/// give byte-identical files.
std::string result_to_json_line(const RsaResult& result);
RsaResult result_from_json_line(std::string_view line, std::string_view context);

void write_results(const std::vector<RsaResult>& results, const std::filesystem::path& path);
/// Appends to an existing results file (creating it when absent).
void append_results(const std::vector<RsaResult>& results, const std::filesystem::path& path);
std::vector<RsaResult> read_results(const std::filesystem::path& path);

struct CeilingRecord {
  std::string species;
  std::string region;
  std::string stimulus_set;
  NoiseCeiling ceiling;

  bool operator==(const CeilingRecord&) const = default;
};

void write_ceilings(const std::vector<CeilingRecord>& records, const std::filesystem::path& path);
std::vector<CeilingRecord> read_ceilings(const std::filesystem::path& path);

}  // namespace crossrsa
