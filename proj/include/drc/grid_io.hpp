#pragma once

// "DRC-GRID v1" files: one UTF-8 header line followed by little-endian
// payload. Header tokens:
//
//   DRC-GRID v1 <kind> <nx> <ny> <nz> <geom-params...> <aux> [notes...]
//
// kind is `uniform` (params: min xyz, max xyz) or `frustum` (alpha1 alpha2 f).
// aux is `none`, `color` or `sem:K`. The payload is nx*ny*nz float64
// emptiness values (x fastest), then the aux payload cell-major if present.
// Binary grids use kind `bin:uniform` / `bin:frustum`, aux `none`, and one
// byte per cell. Notes are free-form `key=value` tokens.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "drc/grid.hpp"

namespace drc {

struct GridFile {
  OccupancyGrid occupancy;
  std::optional<AuxGrid> aux;
  std::vector<std::string> notes;
};

void write_grid(const std::filesystem::path& path, const OccupancyGrid& grid, const AuxGrid* aux = nullptr,
                const std::vector<std::string>& notes = {});
GridFile read_grid(const std::filesystem::path& path);

void write_binary_grid(const std::filesystem::path& path, const BinaryGrid& grid);
BinaryGrid read_binary_grid(const std::filesystem::path& path);

/// Shortest text form that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& token);

}  // namespace drc
