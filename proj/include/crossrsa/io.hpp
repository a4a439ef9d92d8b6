#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace crossrsa::io {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);
double parse_double(std::string_view text, std::string_view context);
long long parse_int(std::string_view text, std::string_view context);

std::vector<std::string> split(std::string_view line, char sep);
std::vector<std::string> split_list(std::string_view text);  // comma list, trimmed, empties dropped

/// Fails for labels that would break the CSV section format.
void require_plain_label(std::string_view label, std::string_view what);

/// Little-endian writer for the binary container formats.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void string(std::string_view s);  // u32 length + bytes
  void close();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string string();
  bool at_end();

 private:
  void read(char* dst, std::size_t n);
  std::ifstream in_;
  std::filesystem::path path_;
  std::uint64_t offset_ = 0;
};

/// True when the file starts with a length-prefixed string equal to `magic`.
bool has_binary_magic(const std::filesystem::path& path, std::string_view magic);

/// One CSV section of a text container: `[name]` followed by rows.
struct Section {
  std::string name;
  std::size_t first_line = 0;  // 1-based line number of the first row
  std::vector<std::vector<std::string>> rows;
};

/// Parses `[section]` headed CSV. Blank lines and lines starting with '#' are skipped.
std::vector<Section> read_sections(const std::filesystem::path& path);
const Section& find_section(const std::vector<Section>& sections, std::string_view name,
                            const std::filesystem::path& path);
/// Reads a two-column key,value section into a map; duplicate keys are an error.
std::map<std::string, std::string> key_values(const Section& section, const std::filesystem::path& path);

/// Non-negative integer header field; missing keys name the file.
std::size_t parse_count(const std::map<std::string, std::string>& header, const std::string& key,
                        const std::filesystem::path& path);
/// `index,id` table with consecutive indices from 0 and `expected` rows.
std::vector<std::string> read_id_table(const Section& section, std::size_t expected,
                                       const std::filesystem::path& path);

/// Named dense tensor, row-major doubles.
struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<double> values;

  bool operator==(const NamedTensor&) const = default;
};

/// Generic versioned binary container shared by checkpoints and feature files:
///   string magic
///   u32 n_meta,    n_meta   x (string key, string value)
///   u32 n_tables,  n_tables x (string name, u64 count, count x string)
///   u32 n_tensors, n_tensors x (string name, u32 rank, rank x u64 dim, prod(dims) x f64)
/// Integers and doubles little-endian; strings are u32 length + UTF-8 bytes.
struct Container {
  std::string format;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::pair<std::string, std::vector<std::string>>> tables;
  std::vector<NamedTensor> tensors;

  const std::string& meta(std::string_view key) const;  // throws DataError when absent
  const std::string* find_meta(std::string_view key) const;
  const std::vector<std::string>& table(std::string_view name) const;
  const NamedTensor* find_tensor(std::string_view name) const;
};

void write_container(const Container& container, const std::filesystem::path& path);
Container read_container(const std::filesystem::path& path, std::string_view expected_format);

}  // namespace crossrsa::io
