#include "drc/camera.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Geometry>

#include "drc/error.hpp"
#include "drc/grid_io.hpp"

namespace drc {

Camera::Camera(CameraModel model, Intrinsics intrinsics, const Mat3& rotation, const Vec3& translation, int width,
               int height)
    : model_(model),
      intrinsics_(intrinsics),
      rotation_(rotation),
      translation_(translation),
      width_(width),
      height_(height) {
  if (!(intrinsics_.fu > 0.0) || !(intrinsics_.fv > 0.0)) {
    throw std::invalid_argument(model_ == CameraModel::perspective ? "focal lengths must be > 0"
                                                                   : "orthographic pixel scales must be > 0");
  }
  if (width_ < 1 || height_ < 1) throw std::invalid_argument("image size must be positive");
  if (!rotation_.allFinite() || !translation_.allFinite()) throw std::invalid_argument("extrinsics must be finite");
  const double ortho_err = (rotation_ * rotation_.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-9 || std::abs(rotation_.determinant() - 1.0) > 1e-9) {
    throw std::invalid_argument("rotation must be orthonormal with determinant +1");
  }
}

Eigen::Vector2d Camera::project(const Vec3& world) const {
  const Vec3 pc = to_camera(world);
  if (model_ == CameraModel::perspective) {
    return {intrinsics_.fu * pc.x() / pc.z() + intrinsics_.u0, intrinsics_.fv * pc.y() / pc.z() + intrinsics_.v0};
  }
  return {pc.x() / intrinsics_.fu + intrinsics_.u0, pc.y() / intrinsics_.fv + intrinsics_.v0};
}

Ray pixel_to_ray(const Camera& camera, double u, double v) {
  const Intrinsics& k = camera.intrinsics();
  const Mat3 to_world = camera.rotation().transpose();
  Ray ray;
  if (camera.model() == CameraModel::perspective) {
    const Vec3 dir_cam((u - k.u0) / k.fu, (v - k.v0) / k.fv, 1.0);
    ray.origin = camera.center();
    ray.direction = (to_world * dir_cam).normalized();
  } else {
    const Vec3 offset_cam(k.fu * (u - k.u0), k.fv * (v - k.v0), 0.0);
    ray.origin = camera.center() + to_world * offset_cam;
    ray.direction = to_world.col(2);
  }
  return ray;
}

Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double hfov_deg, int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12) throw std::invalid_argument("look_at: up vector parallel to viewing direction");
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  const double focal = 0.5 * width / std::tan(0.5 * hfov_deg * std::numbers::pi / 180.0);
  Intrinsics k{focal, focal, 0.5 * width, 0.5 * height};
  return Camera(CameraModel::perspective, k, r, -r * eye, width, height);
}

void write_camera(const std::filesystem::path& path, const Camera& camera) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  const Intrinsics& k = camera.intrinsics();
  out << "model " << (camera.model() == CameraModel::perspective ? "perspective" : "orthographic") << '\n';
  out << "width " << camera.width() << '\n';
  out << "height " << camera.height() << '\n';
  out << "intrinsics " << format_double(k.fu) << ' ' << format_double(k.fv) << ' ' << format_double(k.u0) << ' '
      << format_double(k.v0) << '\n';
  out << "rotation";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out << ' ' << format_double(camera.rotation()(r, c));
  out << "\ntranslation";
  for (int a = 0; a < 3; ++a) out << ' ' << format_double(camera.translation()[a]);
  out << '\n';
  if (!out) throw FormatError("failed writing " + path.string());
}

Camera read_camera(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open camera file " + path.string());
  std::map<std::string, std::vector<std::string>> fields;
  for (std::string line; std::getline(in, line);) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    std::vector<std::string> values;
    for (std::string v; ls >> v;) values.push_back(v);
    if (!fields.emplace(key, std::move(values)).second) throw FormatError("duplicate camera field '" + key + "'");
  }
  auto get = [&](const std::string& key, std::size_t count) -> const std::vector<std::string>& {
    auto it = fields.find(key);
    if (it == fields.end()) throw FormatError(path.string() + ": missing camera field '" + key + "'");
    if (it->second.size() != count) {
      throw FormatError(path.string() + ": camera field '" + key + "' expects " + std::to_string(count) + " values");
    }
    return it->second;
  };
  for (const auto& [key, _] : fields) {
    if (key != "model" && key != "width" && key != "height" && key != "intrinsics" && key != "rotation" &&
        key != "translation") {
      throw FormatError(path.string() + ": unknown camera field '" + key + "'");
    }
  }
  const std::string model_name = get("model", 1)[0];
  CameraModel model;
  if (model_name == "perspective") {
    model = CameraModel::perspective;
  } else if (model_name == "orthographic") {
    model = CameraModel::orthographic;
  } else {
    throw FormatError(path.string() + ": unknown camera model '" + model_name + "'");
  }
  const double w = parse_double(get("width", 1)[0]);
  const double h = parse_double(get("height", 1)[0]);
  const auto& kin = get("intrinsics", 4);
  Intrinsics k{parse_double(kin[0]), parse_double(kin[1]), parse_double(kin[2]), parse_double(kin[3])};
  const auto& rot = get("rotation", 9);
  Mat3 r;
  for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = parse_double(rot[i]);
  const auto& tr = get("translation", 3);
  Vec3 t(parse_double(tr[0]), parse_double(tr[1]), parse_double(tr[2]));
  if (w != std::floor(w) || h != std::floor(h)) throw FormatError(path.string() + ": image size must be integral");
  try {
    return Camera(model, k, r, t, static_cast<int>(w), static_cast<int>(h));
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace drc
