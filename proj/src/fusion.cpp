#include "drc/fusion.hpp"

#include <stdexcept>

#include "drc/traversal.hpp"

namespace drc {

FusedOccupancy fuse_depth(std::span<const Observation> observations, const GridGeometry& geometry) {
  const std::size_t n = geometry.cell_count();
  FusedOccupancy out{FusionGrid{geometry, std::vector<std::uint32_t>(n, 0), std::vector<std::uint32_t>(n, 0)},
                     std::vector<double>(n, 0.0), std::vector<std::uint8_t>(n, 0)};
  auto& empty = out.counts.empty_count;
  auto& occupied = out.counts.occupied_count;

  RayTrace tr{geometry, {}};
  for (const Observation& obs : observations) {
    if (obs.kind != ObservationKind::depth) throw std::invalid_argument("fuse_depth requires depth observations");
    for (int v = 0; v < obs.camera.height(); ++v) {
      for (int u = 0; u < obs.camera.width(); ++u) {
        const std::size_t px = obs.pixel_index(u, v);
        trace_into(geometry, obs.pixel_ray(u, v), tr);
        if (tr.empty()) continue;
        if (!obs.foreground(px)) {
          for (const TraceEntry& e : tr.entries) ++empty[e.cell];
          continue;
        }
        const double d = obs.depth[px];
        std::size_t hit = tr.size() - 1;
        for (std::size_t i = 0; i < tr.size(); ++i) {
          if (d < tr.entries[i].t_exit) {
            hit = i;
            break;
          }
        }
        for (std::size_t i = 0; i < hit; ++i) ++empty[tr.entries[i].cell];
        ++occupied[tr.entries[hit].cell];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t total = static_cast<std::uint64_t>(empty[i]) + occupied[i];
    if (total == 0) continue;
    out.valid[i] = 1;
    out.soft_occupancy[i] = static_cast<double>(occupied[i]) / static_cast<double>(total);
  }
  return out;
}

OccupancyGrid fused_to_occupancy(const FusedOccupancy& fused) {
  std::vector<double> x(fused.soft_occupancy.size(), 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (fused.valid[i]) x[i] = 1.0 - fused.soft_occupancy[i];
  }
  return OccupancyGrid(fused.counts.geometry, std::move(x));
}

BinaryGrid carve_masks(std::span<const Observation> observations, const GridGeometry& geometry) {
  std::vector<std::uint8_t> occ(geometry.cell_count(), 1);
  RayTrace tr{geometry, {}};
  for (const Observation& obs : observations) {
    for (int v = 0; v < obs.camera.height(); ++v) {
      for (int u = 0; u < obs.camera.width(); ++u) {
        if (obs.foreground(obs.pixel_index(u, v))) continue;
        trace_into(geometry, obs.pixel_ray(u, v), tr);
        for (const TraceEntry& e : tr.entries) occ[e.cell] = 0;
      }
    }
  }
  return BinaryGrid(geometry, std::move(occ));
}

}  // namespace drc
