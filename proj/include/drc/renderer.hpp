#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drc/camera.hpp"
#include "drc/consistency.hpp"
#include "drc/grid.hpp"

namespace drc {

/// One image plus its camera. `mask` is always populated (1 = the pixel ray
/// hits the object); the other channels are present according to `kind`:
/// depth -> depth; semantics -> depth + labels; color -> color.
struct Observation {
  ObservationKind kind;
  Camera camera;
  std::vector<std::uint8_t> mask;
  std::vector<double> depth;  // meters along the pixel ray; background pixels hold escape_depth
  std::vector<std::uint8_t> labels;
  std::vector<Rgb> color;
  int num_classes = 0;
  double escape_depth = 0.0;

  std::size_t pixel_count() const { return static_cast<std::size_t>(camera.width()) * camera.height(); }
  std::size_t pixel_index(int u, int v) const { return static_cast<std::size_t>(v) * camera.width() + u; }
  bool foreground(std::size_t pixel) const { return mask[pixel] != 0; }

  /// Ray through the center of pixel (u, v).
  Ray pixel_ray(int u, int v) const { return pixel_to_ray(camera, u + 0.5, v + 0.5); }
  RayObservation ray_observation(std::size_t pixel, double weight = 1.0) const;

  /// Checks channel sizes and value ranges; throws std::invalid_argument.
  void validate() const;
};

struct RenderOptions {
  CostParams cost;  // escape conventions shared with the loss
};

/// Renders a binary grid through every pixel center. Hits report the hit
/// cell's midpoint depth, argmax class, and color; escapes report the escape
/// depth, background class K-1, and white.
Observation render(const BinaryGrid& grid, const AuxGrid* aux, const Camera& camera, ObservationKind kind,
                   const RenderOptions& options = {});

/// Adds independent uniform noise in [-max_noise, max_noise] to every
/// foreground depth. The noise for pixel (u, v) depends only on (seed, u, v).
Observation add_depth_noise(const Observation& observation, double max_noise, std::uint64_t seed);

/// Deterministic uniform sample in [0, 1) keyed on (seed, a, b).
double hashed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

struct TestShape {
  BinaryGrid occupancy;
  AuxGrid color;
  AuxGrid semantics;  // 3 classes: two parts plus background (class 2)
  std::vector<std::size_t> cavity;  // empty cells enclosed laterally by the shape
};

/// Procedural shapes voxelized in the cube [-0.5, 0.5]^3 (+y is up):
/// `sphere` (radius 0.4), `cuboid`, and `chair_like` (seat block with a
/// recessed top and a backrest). Each carries a two-part color/class payload.
TestShape make_test_shape(const std::string& name, Dims dims);

/// The cube [-0.5, 0.5]^3 that test shapes live in.
Aabb unit_cube();

struct ViewRingOptions {
  int width = 128;
  int height = 128;
  double hfov_deg = 55.0;
  Vec3 target = Vec3::Zero();
  /// If set, every camera uses this azimuth instead of a random one.
  std::optional<double> fixed_azimuth_deg;
};

/// Perspective cameras on a sphere of `radius` around the target. Azimuths are
/// jittered-stratified: a random rotation plus one random offset per sector of
/// 360 / n_views degrees. Elevation uniform in [elevation_min, elevation_max]
/// degrees. Azimuth 0 / elevation 0 sits on the +z axis.
std::vector<Camera> sample_view_ring(int n_views, double elevation_min_deg, double elevation_max_deg, double radius,
                                     std::uint64_t seed, const ViewRingOptions& options = {});

}  // namespace drc
