#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "drc/camera.hpp"
#include "drc/grid.hpp"

namespace drc {

struct TraceEntry {
  std::size_t cell = 0;
  double t_enter = 0.0;
  double t_exit = 0.0;

  /// Distance travelled by the ray before terminating in this cell (segment midpoint).
  double depth() const { return 0.5 * (t_enter + t_exit); }
  double length() const { return t_exit - t_enter; }
};

/// Cells pierced by a ray, ordered by increasing t. Consecutive entries share
/// a face, except where the ray passes exactly through an edge or corner: the
/// zero-length cell visited there is dropped.
struct RayTrace {
  GridGeometry geometry;
  std::vector<TraceEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  std::vector<double> depths() const;
};

/// Parametric interval [t0, t1] (t0 >= 0) of the ray inside the grid hull.
std::optional<std::pair<double, double>> clip_to_hull(const GridGeometry& geometry, const Ray& ray);

RayTrace trace(const GridGeometry& geometry, const Ray& ray);

/// Same as trace() but reuses `out`'s storage.
void trace_into(const GridGeometry& geometry, const Ray& ray, RayTrace& out);

struct Hit {
  std::size_t cell = 0;
  std::size_t position = 0;  // index into the trace
  double depth = 0.0;
};

/// First occupied cell along the trace, or nullopt if the ray escapes.
std::optional<Hit> first_hit(const BinaryGrid& grid, const RayTrace& trace);

}  // namespace drc
