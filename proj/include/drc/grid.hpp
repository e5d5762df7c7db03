#pragma once

// Voxel grid geometries and the fields stored on them.
//
// NOTE: OccupancyGrid stores the probability that a cell is EMPTY, not that it
// is occupied. A value of 1.0 means "surely empty", 0.0 means "surely
// occupied". Everything that consumes these grids (losses, gradients,
// evaluation) follows this convention.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace drc {

using Vec3 = Eigen::Vector3d;

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  bool operator==(const Dims&) const = default;
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
};

/// Frustum mapping from grid coordinates (x, y, z) to the world:
///   p = alpha1 * exp(alpha2 * z) * (f * (x - nx/2), f * (y - ny/2), 1)
/// so z-layers are planes Z = const and x/y boundaries are planes through the origin.
struct FrustumParams {
  double alpha1 = 1.0;  // meters
  double alpha2 = 1.0;
  double f = 1.0;
};

enum class GeometryKind { uniform, frustum };

struct CellCoord {
  int ix = 0;
  int iy = 0;
  int iz = 0;
  bool operator==(const CellCoord&) const = default;
};

/// Oriented plane n.p = offset; `normal` points out of the region it bounds.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

class GridGeometry {
 public:
  static GridGeometry uniform(Dims dims, const Aabb& box);
  static GridGeometry frustum(Dims dims, const FrustumParams& params);

  GeometryKind kind() const { return kind_; }
  const Dims& dims() const { return dims_; }
  std::size_t cell_count() const { return dims_.count(); }

  const Aabb& box() const;
  const FrustumParams& frustum_params() const;

  /// Linear index = (iz * ny + iy) * nx + ix.
  std::size_t linear_index(const CellCoord& c) const;
  CellCoord coord(std::size_t index) const;
  bool contains(const CellCoord& c) const;

  Vec3 grid_to_world(const Vec3& g) const;
  Vec3 world_to_grid(const Vec3& p) const;

  /// Cell containing a world point, or nullopt outside the grid. Points on an
  /// interior boundary belong to the cell on the positive side.
  std::optional<std::size_t> locate(const Vec3& p) const;

  std::array<Plane, 6> cell_bounds(std::size_t index) const;
  std::array<Plane, 6> hull_planes() const;
  Vec3 cell_center(std::size_t index) const;
  double cell_volume(std::size_t index) const;

  bool operator==(const GridGeometry& other) const;

 private:
  GridGeometry() = default;
  std::array<Plane, 6> bounds_for(double x0, double x1, double y0, double y1, double z0, double z1) const;

  GeometryKind kind_ = GeometryKind::uniform;
  Dims dims_;
  Aabb box_;
  FrustumParams frustum_;
};

/// Solves alpha1, alpha2, f so that the grid spans depths [z_min, z_max] and
/// the x extent covers a horizontal field of view of hfov_deg.
GridGeometry make_frustum_geometry(Dims dims, double z_min, double z_max, double hfov_deg);

/// Per-cell emptiness probabilities.
class OccupancyGrid {
 public:
  OccupancyGrid(GridGeometry geometry, std::vector<double> x);

  const GridGeometry& geometry() const { return geometry_; }
  std::span<const double> values() const { return x_; }
  double operator[](std::size_t i) const { return x_[i]; }
  std::size_t size() const { return x_.size(); }

  /// Whole-field replacement; validates like the constructor.
  void replace_values(std::vector<double> x);

 private:
  GridGeometry geometry_;
  std::vector<double> x_;
};

OccupancyGrid make_uniform_grid(Dims dims, const Aabb& box, double fill_x);

enum class AuxKind { color, semantics };

/// Per-cell payload: an RGB triple in [0,1]^3 or a K-class probability vector.
/// Stored cell-major: payload[cell * channels + c].
class AuxGrid {
 public:
  AuxGrid(GridGeometry geometry, AuxKind kind, int channels, std::vector<double> payload);

  const GridGeometry& geometry() const { return geometry_; }
  AuxKind kind() const { return kind_; }
  int channels() const { return channels_; }
  std::span<const double> payload() const { return payload_; }
  std::span<const double> cell(std::size_t index) const {
    return std::span<const double>(payload_).subspan(index * channels_, channels_);
  }

  void replace_payload(std::vector<double> payload);

 private:
  void validate() const;

  GridGeometry geometry_;
  AuxKind kind_;
  int channels_;
  std::vector<double> payload_;
};

/// Ground-truth occupancy: 1 = occupied.
class BinaryGrid {
 public:
  BinaryGrid(GridGeometry geometry, std::vector<std::uint8_t> occ);

  const GridGeometry& geometry() const { return geometry_; }
  std::span<const std::uint8_t> values() const { return occ_; }
  bool occupied(std::size_t i) const { return occ_[i] != 0; }
  std::size_t size() const { return occ_.size(); }
  std::size_t occupied_count() const;

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> occ_;
};

/// Binary grid as emptiness probabilities (occupied -> 0, empty -> 1).
OccupancyGrid to_occupancy(const BinaryGrid& grid);

}  // namespace drc
