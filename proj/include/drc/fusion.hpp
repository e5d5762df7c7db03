#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "drc/grid.hpp"
#include "drc/renderer.hpp"

namespace drc {

/// Per-cell counts of rays that passed through (empty) or terminated in
/// (occupied) each cell.
struct FusionGrid {
  GridGeometry geometry;
  std::vector<std::uint32_t> empty_count;
  std::vector<std::uint32_t> occupied_count;
};

struct FusedOccupancy {
  FusionGrid counts;
  std::vector<double> soft_occupancy;  // occupied / (occupied + empty); 0 where invalid
  std::vector<std::uint8_t> valid;     // 0 where both counts are 0
};

/// Depth fusion over every pixel of every observation. A foreground pixel with
/// depth d marks cells exited before d empty and the cell containing d
/// occupied; depths before the grid clamp to the first traversed cell and
/// depths past it clamp to the last. Background pixels mark their whole trace
/// empty.
FusedOccupancy fuse_depth(std::span<const Observation> observations, const GridGeometry& geometry);

/// Fused field in the emptiness convention (x = 1 - soft occupancy). Invalid
/// cells are written as empty (x = 1).
OccupancyGrid fused_to_occupancy(const FusedOccupancy& fused);

/// Visual hull: a cell stays occupied unless some background mask ray crosses it.
BinaryGrid carve_masks(std::span<const Observation> observations, const GridGeometry& geometry);

}  // namespace drc
