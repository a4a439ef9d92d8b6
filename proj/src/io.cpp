#include "crossrsa/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>

#include "crossrsa/error.hpp"

namespace crossrsa::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view text, std::string_view context) {
  if (text == "nan" || text == "NaN") return std::nan("");
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw DataError(std::string(context) + ": cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

long long parse_int(std::string_view text, std::string_view context) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw DataError(std::string(context) + ": cannot parse integer '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  for (auto& item : split(text, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

void require_plain_label(std::string_view label, std::string_view what) {
  if (label.empty() || label.find_first_of(",\n\r[]") != std::string_view::npos || label.front() == '#') {
    throw DataError(std::string(what) + ": label '" + std::string(label) +
                    "' is empty or contains a reserved character");
  }
}

// --- binary -----------------------------------------------------------------

BinaryWriter::BinaryWriter(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw DataError("cannot open '" + path.string() + "' for writing");
}

void BinaryWriter::u32(std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out_.write(b.data(), b.size());
}

void BinaryWriter::u64(std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out_.write(b.data(), b.size());
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::string(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::close() {
  out_.close();
  if (!out_) throw DataError("error writing '" + path_.string() + "'");
}

BinaryReader::BinaryReader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw DataError("cannot open '" + path.string() + "'");
}

void BinaryReader::read(char* dst, std::size_t n) {
  in_.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) {
    throw DataError(path_.string() + ": truncated at byte offset " + std::to_string(offset_));
  }
  offset_ += n;
}

std::uint32_t BinaryReader::u32() {
  std::array<unsigned char, 4> b{};
  read(reinterpret_cast<char*>(b.data()), b.size());
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t BinaryReader::u64() {
  std::array<unsigned char, 8> b{};
  read(reinterpret_cast<char*>(b.data()), b.size());
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::string() {
  const std::uint32_t n = u32();
  if (n > (1u << 24)) throw DataError(path_.string() + ": implausible string length at offset " + std::to_string(offset_));
  std::string s(n, '\0');
  read(s.data(), n);
  return s;
}

bool BinaryReader::at_end() { return in_.peek() == std::char_traits<char>::eof(); }

bool has_binary_magic(const std::filesystem::path& path, std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::array<unsigned char, 4> len{};
  in.read(reinterpret_cast<char*>(len.data()), 4);
  if (in.gcount() != 4) return false;
  const std::uint32_t n = len[0] | (len[1] << 8) | (len[2] << 16) | (static_cast<std::uint32_t>(len[3]) << 24);
  if (n != magic.size()) return false;
  std::string s(n, '\0');
  in.read(s.data(), n);
  return in.gcount() == static_cast<std::streamsize>(n) && s == magic;
}

// --- text sections ------------------------------------------------------------

std::vector<Section> read_sections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<Section> sections;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed section header");
      sections.push_back({line.substr(1, line.size() - 2), line_no + 1, {}});
      continue;
    }
    if (sections.empty()) throw DataError(path.string() + ":" + std::to_string(line_no) + ": data before first section");
    if (sections.back().rows.empty()) sections.back().first_line = line_no;
    sections.back().rows.push_back(split(line, ','));
  }
  return sections;
}

const Section& find_section(const std::vector<Section>& sections, std::string_view name,
                            const std::filesystem::path& path) {
  const Section* found = nullptr;
  for (const auto& s : sections) {
    if (s.name == name) {
      if (found) throw DataError(path.string() + ": duplicate section [" + std::string(name) + "]");
      found = &s;
    }
  }
  if (!found) throw DataError(path.string() + ": missing section [" + std::string(name) + "]");
  return *found;
}

std::map<std::string, std::string> key_values(const Section& section, const std::filesystem::path& path) {
  std::map<std::string, std::string> kv;
  for (std::size_t i = 0; i < section.rows.size(); ++i) {
    const auto& row = section.rows[i];
    const auto where = path.string() + ":" + std::to_string(section.first_line + i);
    if (row.size() != 2) throw DataError(where + ": expected key,value");
    if (!kv.emplace(row[0], row[1]).second) throw DataError(where + ": duplicate key '" + row[0] + "'");
  }
  return kv;
}

// --- container ------------------------------------------------------------------

const std::string* Container::find_meta(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return &v;
  }
  return nullptr;
}

const std::string& Container::meta(std::string_view key) const {
  if (const auto* v = find_meta(key)) return *v;
  throw DataError(format + ": missing header field '" + std::string(key) + "'");
}

const std::vector<std::string>& Container::table(std::string_view name) const {
  for (const auto& [n, t] : tables) {
    if (n == name) return t;
  }
  throw DataError(format + ": missing table '" + std::string(name) + "'");
}

const NamedTensor* Container::find_tensor(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void write_container(const Container& c, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.string(c.format);
  w.u32(static_cast<std::uint32_t>(c.metadata.size()));
  for (const auto& [k, v] : c.metadata) {
    w.string(k);
    w.string(v);
  }
  w.u32(static_cast<std::uint32_t>(c.tables.size()));
  for (const auto& [name, rows] : c.tables) {
    w.string(name);
    w.u64(rows.size());
    for (const auto& s : rows) w.string(s);
  }
  w.u32(static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    w.string(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.u64(d);
    for (double v : t.values) w.f64(v);
  }
  w.close();
}

Container read_container(const std::filesystem::path& path, std::string_view expected_format) {
  if (!has_binary_magic(path, expected_format)) {
    throw DataError(path.string() + ": not a '" + std::string(expected_format) + "' container");
  }
  BinaryReader r(path);
  Container c;
  c.format = r.string();
  const auto n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = r.string();
    auto v = r.string();
    if (c.find_meta(k)) throw DataError(path.string() + ": duplicate header field '" + k + "'");
    c.metadata.emplace_back(std::move(k), std::move(v));
  }
  const auto n_tables = r.u32();
  for (std::uint32_t i = 0; i < n_tables; ++i) {
    auto name = r.string();
    const auto count = r.u64();
    std::vector<std::string> rows;
    rows.reserve(count);
    for (std::uint64_t j = 0; j < count; ++j) rows.push_back(r.string());
    c.tables.emplace_back(std::move(name), std::move(rows));
  }
  const auto n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    t.name = r.string();
    const auto rank = r.u32();
    std::uint64_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.shape.push_back(r.u64());
      count *= t.shape.back();
    }
    if (count > (std::uint64_t{1} << 34)) throw DataError(path.string() + ": implausible tensor size for '" + t.name + "'");
    t.values.resize(count);
    for (auto& v : t.values) v = r.f64();
    if (c.find_tensor(t.name)) throw DataError(path.string() + ": duplicate tensor '" + t.name + "'");
    c.tensors.push_back(std::move(t));
  }
  if (!r.at_end()) throw DataError(path.string() + ": trailing bytes after last tensor");
  return c;
}

std::size_t parse_count(const std::map<std::string, std::string>& header, const std::string& key,
                        const std::filesystem::path& path) {
  const auto it = header.find(key);
  if (it == header.end()) throw DataError(path.string() + ": header missing '" + key + "'");
  const auto v = parse_int(it->second, path.string() + " header " + key);
  if (v < 0) throw DataError(path.string() + ": negative count for '" + key + "'");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> read_id_table(const Section& section, std::size_t expected,
                                       const std::filesystem::path& path) {
  if (section.rows.empty() || section.rows[0] != std::vector<std::string>{"index", "id"}) {
    throw DataError(path.string() + ":" + std::to_string(section.first_line) + ": [" + section.name +
                    "] must start with 'index,id'");
  }
  std::vector<std::string> ids;
  for (std::size_t i = 1; i < section.rows.size(); ++i) {
    const auto& row = section.rows[i];
    const auto where = path.string() + ":" + std::to_string(section.first_line + i);
    if (row.size() != 2) throw DataError(where + ": expected index,id");
    if (parse_int(row[0], where) != static_cast<long long>(ids.size())) {
      throw DataError(where + ": indices must be consecutive from 0");
    }
    ids.push_back(row[1]);
  }
  if (ids.size() != expected) {
    throw DataError(path.string() + ": [" + section.name + "] has " + std::to_string(ids.size()) +
                    " entries, header says " + std::to_string(expected));
  }
  return ids;
}

}  // namespace crossrsa::io
