#include "drc/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "drc/traversal.hpp"

namespace drc {

RayObservation Observation::ray_observation(std::size_t pixel, double weight) const {
  switch (kind) {
    case ObservationKind::mask: return RayObservation::mask(mask[pixel] ? 0.0 : 1.0, weight);
    case ObservationKind::depth: return RayObservation::depth_of(depth[pixel], weight);
    case ObservationKind::semantics: return RayObservation::semantics(depth[pixel], labels[pixel], weight);
    case ObservationKind::color: return RayObservation::color_of(color[pixel], weight);
  }
  throw std::logic_error("unhandled observation kind");
}

void Observation::validate() const {
  const std::size_t n = pixel_count();
  if (mask.size() != n) throw std::invalid_argument("mask channel size mismatch");
  for (auto m : mask) {
    if (m > 1) throw std::invalid_argument("mask pixels must be 0 or 1");
  }
  if (kind == ObservationKind::depth || kind == ObservationKind::semantics) {
    if (depth.size() != n) throw std::invalid_argument("depth channel size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(depth[i] > 0.0) || !std::isfinite(depth[i])) throw std::invalid_argument("depth must be positive");
    }
  }
  if (kind == ObservationKind::semantics) {
    if (labels.size() != n) throw std::invalid_argument("label channel size mismatch");
    for (auto l : labels) {
      if (l >= num_classes) throw std::invalid_argument("class id out of range");
    }
  }
  if (kind == ObservationKind::color) {
    if (color.size() != n) throw std::invalid_argument("color channel size mismatch");
    for (const Rgb& c : color) {
      for (double v : c) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("color values must lie in [0,1]");
      }
    }
  }
}

Observation render(const BinaryGrid& grid, const AuxGrid* aux, const Camera& camera, ObservationKind kind,
                   const RenderOptions& options) {
  if (kind == ObservationKind::color || kind == ObservationKind::semantics) {
    const AuxKind needed = kind == ObservationKind::color ? AuxKind::color : AuxKind::semantics;
    if (!aux || aux->kind() != needed) {
      throw std::invalid_argument(std::string("rendering ") + to_string(kind) + " requires a matching aux grid");
    }
    if (!(aux->geometry() == grid.geometry())) throw std::invalid_argument("aux grid geometry mismatch");
  }
  Observation obs{kind, camera, {}, {}, {}, {}, 0, 0.0};
  const std::size_t n = obs.pixel_count();
  obs.mask.assign(n, 0);
  if (kind == ObservationKind::depth || kind == ObservationKind::semantics) {
    obs.escape_depth =
        kind == ObservationKind::depth ? options.cost.escape_depth : options.cost.semantic_escape_depth;
    obs.depth.assign(n, obs.escape_depth);
  }
  if (kind == ObservationKind::semantics) {
    obs.num_classes = aux->channels();
    obs.labels.assign(n, static_cast<std::uint8_t>(obs.num_classes - 1));
  }
  if (kind == ObservationKind::color) obs.color.assign(n, Rgb{1.0, 1.0, 1.0});

  RayTrace tr{grid.geometry(), {}};
  for (int v = 0; v < camera.height(); ++v) {
    for (int u = 0; u < camera.width(); ++u) {
      const std::size_t px = obs.pixel_index(u, v);
      trace_into(grid.geometry(), obs.pixel_ray(u, v), tr);
      const auto hit = first_hit(grid, tr);
      if (!hit) continue;
      obs.mask[px] = 1;
      if (!obs.depth.empty()) obs.depth[px] = hit->depth;
      if (kind == ObservationKind::semantics) {
        const auto dist = aux->cell(hit->cell);
        obs.labels[px] = static_cast<std::uint8_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
      } else if (kind == ObservationKind::color) {
        const auto c = aux->cell(hit->cell);
        obs.color[px] = Rgb{c[0], c[1], c[2]};
      }
    }
  }
  return obs;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double hashed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

Observation add_depth_noise(const Observation& observation, double max_noise, std::uint64_t seed) {
  if (observation.kind != ObservationKind::depth && observation.kind != ObservationKind::semantics) {
    throw std::invalid_argument("depth noise requires a depth observation");
  }
  if (!(max_noise >= 0.0)) throw std::invalid_argument("max_noise must be >= 0");
  Observation out = observation;
  if (max_noise == 0.0) return out;
  constexpr double kMinDepth = 1e-6;
  for (int v = 0; v < out.camera.height(); ++v) {
    for (int u = 0; u < out.camera.width(); ++u) {
      const std::size_t px = out.pixel_index(u, v);
      if (!out.foreground(px)) continue;
      const double noise = max_noise * (2.0 * hashed_uniform(seed, static_cast<std::uint64_t>(u),
                                                              static_cast<std::uint64_t>(v)) -
                                        1.0);
      out.depth[px] = std::max(out.depth[px] + noise, kMinDepth);
    }
  }
  return out;
}

Aabb unit_cube() { return Aabb{Vec3::Constant(-0.5), Vec3::Constant(0.5)}; }

namespace {

struct Box {
  Vec3 lo;
  Vec3 hi;
  bool contains(const Vec3& p) const { return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all(); }
};

}  // namespace

TestShape make_test_shape(const std::string& name, Dims dims) {
  if (name != "sphere" && name != "cuboid" && name != "chair_like") {
    throw std::invalid_argument("unknown test shape '" + name + "'");
  }
  if (dims.nx < 8 || dims.ny < 8 || dims.nz < 8) throw std::invalid_argument("test shapes need dims >= 8 per axis");
  const GridGeometry geom = GridGeometry::uniform(dims, unit_cube());
  const std::size_t n = geom.cell_count();

  constexpr Rgb kPartA{0.85, 0.2, 0.15};
  constexpr Rgb kPartB{0.15, 0.3, 0.8};
  constexpr int kClasses = 3;

  // Chair: round seat with a shallow recess in its top and a backrest panel along -z.
  constexpr double kSeatRadius = 0.4;
  constexpr double kRecessRadius = 0.25;
  constexpr double kRecessDepth = 0.07;
  const Box back{Vec3(-0.15, 0.0, -0.4), Vec3(0.15, 0.3, -0.28)};
  auto radial = [](const Vec3& p) { return std::hypot(p.x(), p.z()); };

  std::vector<std::uint8_t> occ(n, 0);
  std::vector<double> color(3 * n, 1.0);
  std::vector<double> sem(kClasses * n, 0.0);
  std::vector<std::size_t> cavity;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 c = geom.cell_center(i);
    bool inside = false;
    bool part_a = false;
    if (name == "sphere") {
      inside = c.norm() <= 0.4;
      part_a = c.y() >= 0.0;
    } else if (name == "cuboid") {
      inside = std::abs(c.x()) <= 0.3 && std::abs(c.y()) <= 0.2 && std::abs(c.z()) <= 0.25;
      part_a = c.x() >= 0.0;
    } else {
      const bool in_seat = radial(c) <= kSeatRadius && c.y() >= -0.4 && c.y() <= 0.0;
      const bool in_recess = radial(c) <= kRecessRadius && c.y() >= -kRecessDepth && c.y() <= 0.0;
      inside = (in_seat && !in_recess) || back.contains(c);
      part_a = back.contains(c);
      if (in_recess) cavity.push_back(i);
    }
    if (inside) {
      occ[i] = 1;
      const Rgb& rgb = part_a ? kPartA : kPartB;
      std::copy(rgb.begin(), rgb.end(), color.begin() + static_cast<std::ptrdiff_t>(3 * i));
      sem[kClasses * i + (part_a ? 0 : 1)] = 1.0;
    } else {
      sem[kClasses * i + kClasses - 1] = 1.0;
    }
  }
  return TestShape{BinaryGrid(geom, std::move(occ)), AuxGrid(geom, AuxKind::color, 3, std::move(color)),
                   AuxGrid(geom, AuxKind::semantics, kClasses, std::move(sem)), std::move(cavity)};
}

std::vector<Camera> sample_view_ring(int n_views, double elevation_min_deg, double elevation_max_deg, double radius,
                                     std::uint64_t seed, const ViewRingOptions& options) {
  if (n_views < 1) throw std::invalid_argument("need at least one view");
  if (elevation_max_deg < elevation_min_deg) throw std::invalid_argument("elevation range is reversed");
  if (!(radius > 0.0)) throw std::invalid_argument("view radius must be > 0");
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double rotation = hashed_uniform(seed, ~0ULL, 2);
  std::vector<Camera> cams;
  cams.reserve(static_cast<std::size_t>(n_views));
  for (int i = 0; i < n_views; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    // Jittered stratification: view i draws its azimuth uniformly inside sector i
    // of a randomly rotated partition of the circle.
    const double az = options.fixed_azimuth_deg
                          ? *options.fixed_azimuth_deg
                          : 360.0 * (rotation + (i + hashed_uniform(seed, idx, 0)) / n_views);
    const double el =
        elevation_min_deg + (elevation_max_deg - elevation_min_deg) * hashed_uniform(seed, idx, 1);
    const Vec3 dir(std::sin(az * kDeg) * std::cos(el * kDeg), std::sin(el * kDeg),
                   std::cos(az * kDeg) * std::cos(el * kDeg));
    cams.push_back(look_at(options.target + radius * dir, options.target, Vec3::UnitY(), options.hfov_deg,
                           options.width, options.height));
  }
  return cams;
}

}  // namespace drc
