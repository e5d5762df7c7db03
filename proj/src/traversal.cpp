#include "drc/traversal.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace drc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Segments shorter than this are folded into their predecessor when building
// frustum traces from sorted plane crossings.
constexpr double kMinSegment = 1e-12;

void trace_uniform(const GridGeometry& g, const Ray& ray, double t0, double t1, std::vector<TraceEntry>& out) {
  const Dims& dims = g.dims();
  const Aabb& box = g.box();
  const std::array<int, 3> n{dims.nx, dims.ny, dims.nz};
  const Vec3 h = (box.max - box.min).cwiseQuotient(Vec3(n[0], n[1], n[2]));

  std::array<int, 3> idx{};
  std::array<int, 3> step{};
  std::array<double, 3> t_next{};

  auto boundary_t = [&](int a) {
    const double plane = box.min[a] + (idx[a] + (step[a] > 0 ? 1 : 0)) * h[a];
    return (plane - ray.origin[a]) / ray.direction[a];
  };

  const Vec3 entry = ray.origin + t0 * ray.direction;
  for (int a = 0; a < 3; ++a) {
    const double d = ray.direction[a];
    step[a] = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    idx[a] = std::clamp(static_cast<int>(std::floor((entry[a] - box.min[a]) / h[a])), 0, n[a] - 1);
    if (step[a] == 0) {
      t_next[a] = kInf;
      continue;
    }
    // Advance past boundaries that lie at or before the entry point, so that a
    // ray starting on a boundary is assigned to the cell it moves into.
    t_next[a] = boundary_t(a);
    while (t_next[a] <= t0 && idx[a] + step[a] >= 0 && idx[a] + step[a] < n[a]) {
      idx[a] += step[a];
      t_next[a] = boundary_t(a);
    }
  }

  [[maybe_unused]] const std::size_t cap = static_cast<std::size_t>(n[0] + n[1] + n[2] + 3);
  double t = t0;
  while (true) {
    int axis = 0;
    if (t_next[1] < t_next[axis]) axis = 1;
    if (t_next[2] < t_next[axis]) axis = 2;
    const double crossing = t_next[axis];
    const double t_exit = std::min(crossing, t1);
    if (t_exit > t) {
      out.push_back(TraceEntry{g.linear_index(CellCoord{idx[0], idx[1], idx[2]}), t, t_exit});
      assert(out.size() <= cap);
    }
    if (crossing >= t1) break;
    idx[axis] += step[axis];
    if (idx[axis] < 0 || idx[axis] >= n[axis]) break;
    t = std::max(t, t_exit);
    t_next[axis] = boundary_t(axis);
  }
  if (!out.empty()) out.back().t_exit = std::max(out.back().t_exit, t1);
}

void trace_frustum(const GridGeometry& g, const Ray& ray, double t0, double t1, std::vector<TraceEntry>& out) {
  const Dims& dims = g.dims();
  const FrustumParams& fp = g.frustum_params();
  const Vec3& o = ray.origin;
  const Vec3& d = ray.direction;

  std::vector<double> cuts;
  cuts.reserve(static_cast<std::size_t>(dims.nx + dims.ny + dims.nz));
  auto add = [&](double t) {
    if (t > t0 && t < t1) cuts.push_back(t);
  };
  // Planes through the origin: X = s Z and Y = s Z.
  for (int k = 1; k < dims.nx; ++k) {
    const double s = fp.f * (k - 0.5 * dims.nx);
    const double denom = d.x() - s * d.z();
    if (denom != 0.0) add(-(o.x() - s * o.z()) / denom);
  }
  for (int k = 1; k < dims.ny; ++k) {
    const double s = fp.f * (k - 0.5 * dims.ny);
    const double denom = d.y() - s * d.z();
    if (denom != 0.0) add(-(o.y() - s * o.z()) / denom);
  }
  if (d.z() != 0.0) {
    for (int k = 1; k < dims.nz; ++k) add((fp.alpha1 * std::exp(fp.alpha2 * k) - o.z()) / d.z());
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(t1);

  auto cell_at = [&](double t) {
    const Vec3 gc = g.world_to_grid(o + t * d);
    const CellCoord c{std::clamp(static_cast<int>(std::floor(gc.x())), 0, dims.nx - 1),
                      std::clamp(static_cast<int>(std::floor(gc.y())), 0, dims.ny - 1),
                      std::clamp(static_cast<int>(std::floor(gc.z())), 0, dims.nz - 1)};
    return g.linear_index(c);
  };

  double a = t0;
  for (double b : cuts) {
    if (b - a < kMinSegment) {
      if (!out.empty()) out.back().t_exit = b;
      a = std::max(a, b);
      continue;
    }
    const std::size_t cell = cell_at(0.5 * (a + b));
    if (!out.empty() && out.back().cell == cell) {
      out.back().t_exit = b;
    } else {
      out.push_back(TraceEntry{cell, a, b});
    }
    a = b;
  }
  assert(out.size() <= cuts.size());
}

}  // namespace

std::vector<double> RayTrace::depths() const {
  std::vector<double> d(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) d[i] = entries[i].depth();
  return d;
}

std::optional<std::pair<double, double>> clip_to_hull(const GridGeometry& geometry, const Ray& ray) {
  double t_near = 0.0;
  double t_far = kInf;
  for (const Plane& pl : geometry.hull_planes()) {
    const double denom = pl.normal.dot(ray.direction);
    const double num = pl.offset - pl.normal.dot(ray.origin);
    if (denom == 0.0) {
      if (num < 0.0) return std::nullopt;
      continue;
    }
    const double t = num / denom;
    if (denom > 0.0) {
      t_far = std::min(t_far, t);
    } else {
      t_near = std::max(t_near, t);
    }
  }
  if (!(t_near < t_far) || !std::isfinite(t_far)) return std::nullopt;
  return std::make_pair(t_near, t_far);
}

void trace_into(const GridGeometry& geometry, const Ray& ray, RayTrace& out) {
  out.geometry = geometry;
  out.entries.clear();
  const auto span = clip_to_hull(geometry, ray);
  if (!span) return;
  if (geometry.kind() == GeometryKind::uniform) {
    trace_uniform(geometry, ray, span->first, span->second, out.entries);
  } else {
    trace_frustum(geometry, ray, span->first, span->second, out.entries);
  }
}

RayTrace trace(const GridGeometry& geometry, const Ray& ray) {
  RayTrace out{geometry, {}};
  trace_into(geometry, ray, out);
  return out;
}

std::optional<Hit> first_hit(const BinaryGrid& grid, const RayTrace& trace) {
  if (!(grid.geometry() == trace.geometry)) throw std::invalid_argument("first_hit: trace geometry does not match grid");
  for (std::size_t i = 0; i < trace.entries.size(); ++i) {
    const TraceEntry& e = trace.entries[i];
    if (grid.occupied(e.cell)) return Hit{e.cell, i, e.depth()};
  }
  return std::nullopt;
}

}  // namespace drc
