#include "drc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace drc {
namespace {

void check_dims(const Dims& d) {
  if (d.nx < 1) throw std::invalid_argument("dims.nx must be >= 1, got " + std::to_string(d.nx));
  if (d.ny < 1) throw std::invalid_argument("dims.ny must be >= 1, got " + std::to_string(d.ny));
  if (d.nz < 1) throw std::invalid_argument("dims.nz must be >= 1, got " + std::to_string(d.nz));
}

Plane make_plane(Vec3 normal, double offset) {
  const double n = normal.norm();
  return Plane{normal / n, offset / n};
}

}  // namespace

GridGeometry GridGeometry::uniform(Dims dims, const Aabb& box) {
  check_dims(dims);
  const char* axis[] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(box.min[a]) || !std::isfinite(box.max[a]) || !(box.max[a] > box.min[a])) {
      throw std::invalid_argument(std::string("aabb extent along ") + axis[a] + " must be positive and finite");
    }
  }
  GridGeometry g;
  g.kind_ = GeometryKind::uniform;
  g.dims_ = dims;
  g.box_ = box;
  return g;
}

GridGeometry GridGeometry::frustum(Dims dims, const FrustumParams& params) {
  check_dims(dims);
  if (!(params.alpha1 > 0.0) || !std::isfinite(params.alpha1)) throw std::invalid_argument("frustum alpha1 must be > 0");
  if (!(params.alpha2 > 0.0) || !std::isfinite(params.alpha2)) throw std::invalid_argument("frustum alpha2 must be > 0");
  if (!(params.f > 0.0) || !std::isfinite(params.f)) throw std::invalid_argument("frustum f must be > 0");
  GridGeometry g;
  g.kind_ = GeometryKind::frustum;
  g.dims_ = dims;
  g.frustum_ = params;
  return g;
}

GridGeometry make_frustum_geometry(Dims dims, double z_min, double z_max, double hfov_deg) {
  check_dims(dims);
  if (!(z_min > 0.0)) throw std::invalid_argument("z_min must be > 0");
  if (!(z_max > z_min)) throw std::invalid_argument("z_max must be greater than z_min");
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) throw std::invalid_argument("hfov must lie in (0, 180) degrees");
  FrustumParams p;
  p.alpha1 = z_min;
  p.alpha2 = std::log(z_max / z_min) / dims.nz;
  p.f = std::tan(0.5 * hfov_deg * std::numbers::pi / 180.0) / (0.5 * dims.nx);
  return GridGeometry::frustum(dims, p);
}

const Aabb& GridGeometry::box() const {
  if (kind_ != GeometryKind::uniform) throw std::logic_error("box() requires a uniform geometry");
  return box_;
}

const FrustumParams& GridGeometry::frustum_params() const {
  if (kind_ != GeometryKind::frustum) throw std::logic_error("frustum_params() requires a frustum geometry");
  return frustum_;
}

std::size_t GridGeometry::linear_index(const CellCoord& c) const {
  if (!contains(c)) throw std::out_of_range("cell coordinate out of range");
  return (static_cast<std::size_t>(c.iz) * dims_.ny + c.iy) * dims_.nx + c.ix;
}

CellCoord GridGeometry::coord(std::size_t index) const {
  if (index >= cell_count()) throw std::out_of_range("cell index " + std::to_string(index) + " out of range");
  CellCoord c;
  c.ix = static_cast<int>(index % dims_.nx);
  index /= dims_.nx;
  c.iy = static_cast<int>(index % dims_.ny);
  c.iz = static_cast<int>(index / dims_.ny);
  return c;
}

bool GridGeometry::contains(const CellCoord& c) const {
  return c.ix >= 0 && c.iy >= 0 && c.iz >= 0 && c.ix < dims_.nx && c.iy < dims_.ny && c.iz < dims_.nz;
}

Vec3 GridGeometry::grid_to_world(const Vec3& g) const {
  if (kind_ == GeometryKind::uniform) {
    const Vec3 n(dims_.nx, dims_.ny, dims_.nz);
    return box_.min + (box_.max - box_.min).cwiseProduct(g.cwiseQuotient(n));
  }
  const double z = frustum_.alpha1 * std::exp(frustum_.alpha2 * g.z());
  return Vec3(z * frustum_.f * (g.x() - 0.5 * dims_.nx), z * frustum_.f * (g.y() - 0.5 * dims_.ny), z);
}

Vec3 GridGeometry::world_to_grid(const Vec3& p) const {
  if (kind_ == GeometryKind::uniform) {
    const Vec3 n(dims_.nx, dims_.ny, dims_.nz);
    return (p - box_.min).cwiseQuotient(box_.max - box_.min).cwiseProduct(n);
  }
  if (!(p.z() > 0.0)) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return Vec3(nan, nan, nan);
  }
  return Vec3(p.x() / (p.z() * frustum_.f) + 0.5 * dims_.nx, p.y() / (p.z() * frustum_.f) + 0.5 * dims_.ny,
              std::log(p.z() / frustum_.alpha1) / frustum_.alpha2);
}

std::optional<std::size_t> GridGeometry::locate(const Vec3& p) const {
  const Vec3 g = world_to_grid(p);
  if (!g.allFinite()) return std::nullopt;
  const CellCoord c{static_cast<int>(std::floor(g.x())), static_cast<int>(std::floor(g.y())),
                    static_cast<int>(std::floor(g.z()))};
  if (g.x() < 0.0 || g.y() < 0.0 || g.z() < 0.0 || !contains(c)) return std::nullopt;
  return linear_index(c);
}

std::array<Plane, 6> GridGeometry::bounds_for(double x0, double x1, double y0, double y1, double z0,
                                               double z1) const {
  if (kind_ == GeometryKind::uniform) {
    const Vec3 lo = grid_to_world(Vec3(x0, y0, z0));
    const Vec3 hi = grid_to_world(Vec3(x1, y1, z1));
    return {Plane{-Vec3::UnitX(), -lo.x()}, Plane{Vec3::UnitX(), hi.x()},
            Plane{-Vec3::UnitY(), -lo.y()}, Plane{Vec3::UnitY(), hi.y()},
            Plane{-Vec3::UnitZ(), -lo.z()}, Plane{Vec3::UnitZ(), hi.z()}};
  }
  const double f = frustum_.f;
  const double sx0 = f * (x0 - 0.5 * dims_.nx), sx1 = f * (x1 - 0.5 * dims_.nx);
  const double sy0 = f * (y0 - 0.5 * dims_.ny), sy1 = f * (y1 - 0.5 * dims_.ny);
  const double zlo = frustum_.alpha1 * std::exp(frustum_.alpha2 * z0);
  const double zhi = frustum_.alpha1 * std::exp(frustum_.alpha2 * z1);
  // Side planes X = s Z pass through the origin; interior lies between s0 Z and s1 Z.
  return {make_plane(Vec3(-1.0, 0.0, sx0), 0.0), make_plane(Vec3(1.0, 0.0, -sx1), 0.0),
          make_plane(Vec3(0.0, -1.0, sy0), 0.0), make_plane(Vec3(0.0, 1.0, -sy1), 0.0),
          Plane{-Vec3::UnitZ(), -zlo},           Plane{Vec3::UnitZ(), zhi}};
}

std::array<Plane, 6> GridGeometry::cell_bounds(std::size_t index) const {
  const CellCoord c = coord(index);
  return bounds_for(c.ix, c.ix + 1, c.iy, c.iy + 1, c.iz, c.iz + 1);
}

std::array<Plane, 6> GridGeometry::hull_planes() const {
  return bounds_for(0, dims_.nx, 0, dims_.ny, 0, dims_.nz);
}

Vec3 GridGeometry::cell_center(std::size_t index) const {
  const CellCoord c = coord(index);
  return grid_to_world(Vec3(c.ix + 0.5, c.iy + 0.5, c.iz + 0.5));
}

double GridGeometry::cell_volume(std::size_t index) const {
  const CellCoord c = coord(index);
  if (kind_ == GeometryKind::uniform) {
    const Vec3 ext = box_.max - box_.min;
    return ext.x() * ext.y() * ext.z() / static_cast<double>(cell_count());
  }
  // Cross-section at depth Z is an (f Z) x (f Z) rectangle.
  const double z0 = frustum_.alpha1 * std::exp(frustum_.alpha2 * c.iz);
  const double z1 = frustum_.alpha1 * std::exp(frustum_.alpha2 * (c.iz + 1));
  return frustum_.f * frustum_.f * (z1 * z1 * z1 - z0 * z0 * z0) / 3.0;
}

bool GridGeometry::operator==(const GridGeometry& other) const {
  if (kind_ != other.kind_ || dims_ != other.dims_) return false;
  if (kind_ == GeometryKind::uniform) return box_.min == other.box_.min && box_.max == other.box_.max;
  return frustum_.alpha1 == other.frustum_.alpha1 && frustum_.alpha2 == other.frustum_.alpha2 &&
         frustum_.f == other.frustum_.f;
}

// ---------------------------------------------------------------------------

namespace {
void check_unit_interval(std::span<const double> x, const char* what) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
      throw std::invalid_argument(std::string(what) + " value at cell " + std::to_string(i) + " outside [0,1]");
    }
  }
}
}  // namespace

OccupancyGrid::OccupancyGrid(GridGeometry geometry, std::vector<double> x)
    : geometry_(std::move(geometry)), x_(std::move(x)) {
  if (x_.size() != geometry_.cell_count()) throw std::invalid_argument("occupancy field size does not match dims");
  check_unit_interval(x_, "occupancy");
}

void OccupancyGrid::replace_values(std::vector<double> x) {
  if (x.size() != geometry_.cell_count()) throw std::invalid_argument("occupancy field size does not match dims");
  check_unit_interval(x, "occupancy");
  x_ = std::move(x);
}

OccupancyGrid make_uniform_grid(Dims dims, const Aabb& box, double fill_x) {
  if (!(fill_x >= 0.0 && fill_x <= 1.0)) throw std::invalid_argument("fill_x must lie in [0,1]");
  GridGeometry g = GridGeometry::uniform(dims, box);
  std::vector<double> x(g.cell_count(), fill_x);
  return OccupancyGrid(std::move(g), std::move(x));
}

AuxGrid::AuxGrid(GridGeometry geometry, AuxKind kind, int channels, std::vector<double> payload)
    : geometry_(std::move(geometry)), kind_(kind), channels_(channels), payload_(std::move(payload)) {
  if (kind_ == AuxKind::color && channels_ != 3) throw std::invalid_argument("color aux grid needs 3 channels");
  if (kind_ == AuxKind::semantics && channels_ < 1) throw std::invalid_argument("semantic aux grid needs K >= 1");
  validate();
}

void AuxGrid::replace_payload(std::vector<double> payload) {
  std::swap(payload_, payload);
  try {
    validate();
  } catch (...) {
    std::swap(payload_, payload);
    throw;
  }
}

void AuxGrid::validate() const {
  const std::size_t n = geometry_.cell_count();
  if (payload_.size() != n * static_cast<std::size_t>(channels_)) {
    throw std::invalid_argument("aux payload size does not match dims x channels");
  }
  if (kind_ == AuxKind::color) {
    check_unit_interval(payload_, "color");
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int k = 0; k < channels_; ++k) {
      const double p = payload_[i * channels_ + k];
      if (!(p >= 0.0)) throw std::invalid_argument("semantic probability negative at cell " + std::to_string(i));
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("semantic distribution at cell " + std::to_string(i) + " does not sum to 1");
    }
  }
}

BinaryGrid::BinaryGrid(GridGeometry geometry, std::vector<std::uint8_t> occ)
    : geometry_(std::move(geometry)), occ_(std::move(occ)) {
  if (occ_.size() != geometry_.cell_count()) throw std::invalid_argument("binary field size does not match dims");
  for (auto& v : occ_) v = v ? 1 : 0;
}

std::size_t BinaryGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occ_.begin(), occ_.end(), std::uint8_t{1}));
}

OccupancyGrid to_occupancy(const BinaryGrid& grid) {
  std::vector<double> x(grid.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = grid.occupied(i) ? 0.0 : 1.0;
  return OccupancyGrid(grid.geometry(), std::move(x));
}

}  // namespace drc
