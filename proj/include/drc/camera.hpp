#pragma once

#include <filesystem>

#include <Eigen/Core>

#include "drc/grid.hpp"

namespace drc {

using Mat3 = Eigen::Matrix3d;

enum class CameraModel { perspective, orthographic };

/// Perspective: fu, fv are focal lengths in pixels.
/// Orthographic: fu, fv are meters per pixel.
struct Intrinsics {
  double fu = 1.0;
  double fv = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;

  bool operator==(const Intrinsics&) const = default;
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

/// Calibrated camera with a world->camera rigid transform p_c = R p_w + t.
/// Camera frame: +z forward, +x right (increasing u), +y down (increasing v).
class Camera {
 public:
  Camera(CameraModel model, Intrinsics intrinsics, const Mat3& rotation, const Vec3& translation, int width,
         int height);

  CameraModel model() const { return model_; }
  const Intrinsics& intrinsics() const { return intrinsics_; }
  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  int width() const { return width_; }
  int height() const { return height_; }

  Vec3 center() const { return -rotation_.transpose() * translation_; }
  Vec3 to_camera(const Vec3& world) const { return rotation_ * world + translation_; }

  /// Pixel coordinates of a world point. Perspective projection requires z > 0.
  Eigen::Vector2d project(const Vec3& world) const;

  bool operator==(const Camera&) const = default;

 private:
  CameraModel model_;
  Intrinsics intrinsics_;
  Mat3 rotation_;
  Vec3 translation_;
  int width_;
  int height_;
};

Ray pixel_to_ray(const Camera& camera, double u, double v);

/// Perspective camera at `eye` looking at `target`; image +v maps to -up.
Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double hfov_deg, int width, int height);

// Camera text file, one key per line:
//   model perspective|orthographic
//   width <int>
//   height <int>
//   intrinsics <fu> <fv> <u0> <v0>
//   rotation <9 numbers, row-major, world->camera>
//   translation <3 numbers>
// Blank lines and lines starting with '#' are ignored.
void write_camera(const std::filesystem::path& path, const Camera& camera);
Camera read_camera(const std::filesystem::path& path);

}  // namespace drc
