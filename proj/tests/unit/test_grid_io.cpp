#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "drc/error.hpp"
#include "drc/grid_io.hpp"

using namespace drc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("drc_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST(GridIo, HeaderAndLittleEndianPayload) {
  const fs::path dir = temp_dir("grid_header");
  const GridGeometry g = GridGeometry::uniform(Dims{2, 1, 1}, Aabb{Vec3(0, 0, 0), Vec3(2, 1, 1)});
  write_grid(dir / "a.grid", OccupancyGrid(g, {0.25, 1.0}));
  const std::string bytes = slurp(dir / "a.grid");
  const std::string header = "DRC-GRID v1 uniform 2 1 1 0 0 0 2 1 1 none\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  ASSERT_EQ(bytes.size(), header.size() + 16);
  // 0.25 = 0x3FD0000000000000, little-endian.
  const unsigned char expected[8] = {0, 0, 0, 0, 0, 0, 0xD0, 0x3F};
  EXPECT_EQ(std::memcmp(bytes.data() + header.size(), expected, 8), 0);
}

TEST(GridIo, RoundTripIsBitExact) {
  const fs::path dir = temp_dir("grid_roundtrip");
  const GridGeometry g = make_frustum_geometry(Dims{3, 2, 2}, 0.5, 1000.0, 50.0);
  std::vector<double> x(g.cell_count());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 / (3.0 + static_cast<double>(i));
  std::vector<double> sem;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sem.push_back(1.0 / 3.0);
    sem.push_back(1.0 / 3.0);
    sem.push_back(1.0 - 2.0 / 3.0);
  }
  const AuxGrid aux(g, AuxKind::semantics, 3, sem);
  write_grid(dir / "f.grid", OccupancyGrid(g, x), &aux, {"source=test"});
  const GridFile back = read_grid(dir / "f.grid");
  EXPECT_TRUE(back.occupancy.geometry() == g);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(back.occupancy[i], x[i]);
  ASSERT_TRUE(back.aux.has_value());
  EXPECT_EQ(back.aux->channels(), 3);
  for (std::size_t i = 0; i < sem.size(); ++i) EXPECT_EQ(back.aux->payload()[i], sem[i]);
  ASSERT_EQ(back.notes.size(), 1u);
  EXPECT_EQ(back.notes[0], "source=test");
  // Writing what was read reproduces the file byte for byte.
  write_grid(dir / "g.grid", back.occupancy, &*back.aux, back.notes);
  EXPECT_EQ(slurp(dir / "f.grid"), slurp(dir / "g.grid"));
}

TEST(GridIo, BinaryGridRoundTrip) {
  const fs::path dir = temp_dir("grid_binary");
  const GridGeometry g = GridGeometry::uniform(Dims{2, 2, 1}, Aabb{});
  write_binary_grid(dir / "b.bin", BinaryGrid(g, {1, 0, 0, 1}));
  EXPECT_EQ(slurp(dir / "b.bin").rfind("DRC-GRID v1 bin:uniform 2 2 1", 0), 0u);
  const BinaryGrid b = read_binary_grid(dir / "b.bin");
  EXPECT_EQ(std::vector<std::uint8_t>(b.values().begin(), b.values().end()),
            (std::vector<std::uint8_t>{1, 0, 0, 1}));
  EXPECT_THROW(read_grid(dir / "b.bin"), FormatError);
}

TEST(GridIo, MalformedFilesRejected) {
  const fs::path dir = temp_dir("grid_bad");
  {
    std::ofstream(dir / "magic.grid") << "NOT-A-GRID v1 uniform 1 1 1 0 0 0 1 1 1 none\n";
  }
  EXPECT_THROW(read_grid(dir / "magic.grid"), FormatError);
  {
    std::ofstream(dir / "short.grid", std::ios::binary) << "DRC-GRID v1 uniform 2 1 1 0 0 0 1 1 1 none\n1234";
  }
  EXPECT_THROW(read_grid(dir / "short.grid"), FormatError);
  EXPECT_THROW(read_grid(dir / "missing.grid"), FormatError);
}

TEST(GridIo, ShortestRoundTripText) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 1000.0}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_THROW(parse_double("abc"), FormatError);
}
