#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "crossrsa/error.hpp"
#include "crossrsa/io.hpp"
#include "crossrsa/rng.hpp"
#include "temp_dir.hpp"

using namespace crossrsa;

TEST(FormatDouble, RoundTripsExactly) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(40)) - 20.0);
    EXPECT_EQ(io::parse_double(io::format_double(v), "test"), v);
  }
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(io::format_double(std::nan("")), "nan");
  EXPECT_TRUE(std::isnan(io::parse_double("nan", "test")));
}

TEST(Parse, RejectsTrailingGarbage) {
  EXPECT_THROW(io::parse_double("1.5x", "ctx"), DataError);
  EXPECT_THROW(io::parse_int("12 ", "ctx"), DataError);
  EXPECT_EQ(io::parse_int("-7", "ctx"), -7);
}

TEST(SplitList, TrimsAndDropsEmpties) {
  EXPECT_EQ(io::split_list(" a, b ,,c "), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(io::split("a,,b", ','), (std::vector<std::string>{"a", "", "b"}));
}

TEST(Binary, LittleEndianLayout) {
  TempDir dir;
  const auto path = dir / "x.bin";
  {
    io::BinaryWriter w(path);
    w.u32(0x01020304u);
    w.f64(1.0);
    w.string("ab");
    w.close();
  }
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const std::vector<unsigned char> want{0x04, 0x03, 0x02, 0x01, 0, 0, 0, 0, 0, 0, 0xF0, 0x3F, 2, 0, 0, 0, 'a', 'b'};
  EXPECT_EQ(bytes, want);
}

TEST(Binary, TruncationReportsOffset) {
  TempDir dir;
  const auto path = dir / "t.bin";
  {
    io::BinaryWriter w(path);
    w.u32(5);
    w.close();
  }
  io::BinaryReader r(path);
  r.u32();
  try {
    r.u64();
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("offset 4"), std::string::npos);
  }
}

TEST(Container, RoundTrip) {
  TempDir dir;
  io::Container c;
  c.format = "test-format/1";
  c.metadata = {{"model", "BP"}, {"seed", "3"}};
  c.tables = {{"stimuli", {"a", "b"}}};
  c.tensors = {{"w", {2, 3}, {1, 2, 3, 4, 5, 6}}, {"b", {2}, {-1, 0.5}}};
  io::write_container(c, dir / "c.bin");
  EXPECT_TRUE(io::has_binary_magic(dir / "c.bin", "test-format/1"));
  const auto back = io::read_container(dir / "c.bin", "test-format/1");
  EXPECT_EQ(back.metadata, c.metadata);
  EXPECT_EQ(back.tables, c.tables);
  EXPECT_EQ(back.tensors, c.tensors);
  EXPECT_EQ(back.meta("seed"), "3");
  EXPECT_THROW(back.meta("layer"), DataError);
  EXPECT_THROW(io::read_container(dir / "c.bin", "other/1"), DataError);
}

TEST(Container, TrailingBytesRejected) {
  TempDir dir;
  io::Container c;
  c.format = "f/1";
  io::write_container(c, dir / "c.bin");
  std::ofstream(dir / "c.bin", std::ios::binary | std::ios::app) << 'x';
  EXPECT_THROW(io::read_container(dir / "c.bin", "f/1"), DataError);
}

TEST(Sections, ParsesHeadersCommentsAndLineNumbers) {
  TempDir dir;
  std::ofstream(dir / "s.txt") << "# comment\n[header]\nformat,x\n\n[rows]\na,b\n1,2\n";
  const auto sections = io::read_sections(dir / "s.txt");
  ASSERT_EQ(sections.size(), 2u);
  const auto& rows = io::find_section(sections, "rows", dir / "s.txt");
  EXPECT_EQ(rows.first_line, 6u);
  EXPECT_EQ(rows.rows.size(), 2u);
  EXPECT_EQ(io::key_values(sections[0], dir / "s.txt").at("format"), "x");
  EXPECT_THROW(io::find_section(sections, "missing", dir / "s.txt"), DataError);
}
