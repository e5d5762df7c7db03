#include "drc/observation_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "drc/error.hpp"
#include "drc/grid_io.hpp"
#include "drc/image_io.hpp"

namespace drc {
namespace fs = std::filesystem;

void write_observation(const fs::path& dir, const Observation& obs) {
  obs.validate();
  fs::create_directories(dir);
  {
    std::ofstream k(dir / "kind.txt", std::ios::trunc);
    if (!k) throw FormatError("cannot write " + (dir / "kind.txt").string());
    k << to_string(obs.kind);
    if (obs.kind == ObservationKind::depth || obs.kind == ObservationKind::semantics) {
      k << " escape=" << format_double(obs.escape_depth);
    }
    if (obs.kind == ObservationKind::semantics) k << " classes=" << obs.num_classes;
    k << '\n';
  }
  write_camera(dir / "camera.txt", obs.camera);
  const int w = obs.camera.width();
  const int h = obs.camera.height();
  switch (obs.kind) {
    case ObservationKind::mask:
      write_pgm(dir / "mask.pgm", GrayImage{w, h, 1, obs.mask});
      break;
    case ObservationKind::semantics:
      write_pgm(dir / "labels.pgm", GrayImage{w, h, 255, obs.labels});
      [[fallthrough]];
    case ObservationKind::depth: {
      FloatImage img{w, h, std::vector<float>(obs.depth.size())};
      std::transform(obs.depth.begin(), obs.depth.end(), img.pixels.begin(),
                     [](double d) { return static_cast<float>(d); });
      write_pfm(dir / "depth.pfm", img);
      break;
    }
    case ObservationKind::color: {
      RgbImage img{w, h, std::vector<std::uint8_t>(3 * obs.color.size())};
      for (std::size_t i = 0; i < obs.color.size(); ++i) {
        for (int c = 0; c < 3; ++c) img.pixels[3 * i + c] = static_cast<std::uint8_t>(std::lround(obs.color[i][c] * 255.0));
      }
      write_ppm(dir / "color.ppm", img);
      break;
    }
  }
}

namespace {

template <typename Image>
void check_image_size(const Image& img, const Camera& cam, const fs::path& path) {
  if (img.width != cam.width() || img.height != cam.height()) {
    throw FormatError(path.string() + ": image size does not match camera");
  }
}

}  // namespace

Observation read_observation(const fs::path& dir) {
  std::ifstream k(dir / "kind.txt");
  if (!k) throw FormatError("missing kind.txt in observation bundle " + dir.string());
  std::string line;
  std::getline(k, line);
  std::istringstream ls(line);
  std::string kind_name;
  ls >> kind_name;
  ObservationKind kind;
  try {
    kind = parse_observation_kind(kind_name);
  } catch (const std::invalid_argument& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
  double escape = 0.0;
  int classes = 0;
  for (std::string tok; ls >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError(dir.string() + ": malformed kind.txt token '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string value = tok.substr(eq + 1);
    if (key == "escape") {
      escape = parse_double(value);
    } else if (key == "classes") {
      classes = static_cast<int>(parse_double(value));
    } else {
      throw FormatError(dir.string() + ": unknown kind.txt key '" + key + "'");
    }
  }

  Observation obs{kind, read_camera(dir / "camera.txt"), {}, {}, {}, {}, classes, escape};
  const std::size_t n = obs.pixel_count();
  switch (kind) {
    case ObservationKind::mask: {
      GrayImage img = read_pgm(dir / "mask.pgm");
      check_image_size(img, obs.camera, dir / "mask.pgm");
      if (img.maxval != 1) throw FormatError(dir.string() + ": mask.pgm must have maxval 1");
      obs.mask = std::move(img.pixels);
      break;
    }
    case ObservationKind::semantics:
    case ObservationKind::depth: {
      if (!(escape > 0.0)) throw FormatError(dir.string() + ": depth bundle needs escape=<meters> in kind.txt");
      FloatImage img = read_pfm(dir / "depth.pfm");
      check_image_size(img, obs.camera, dir / "depth.pfm");
      obs.depth.assign(img.pixels.begin(), img.pixels.end());
      obs.mask.resize(n);
      const auto esc = static_cast<double>(static_cast<float>(escape));
      for (std::size_t i = 0; i < n; ++i) obs.mask[i] = obs.depth[i] < esc ? 1 : 0;
      if (kind == ObservationKind::semantics) {
        if (classes < 1) throw FormatError(dir.string() + ": semantics bundle needs classes=<K> in kind.txt");
        GrayImage labels = read_pgm(dir / "labels.pgm");
        check_image_size(labels, obs.camera, dir / "labels.pgm");
        obs.labels = std::move(labels.pixels);
      }
      break;
    }
    case ObservationKind::color: {
      RgbImage img = read_ppm(dir / "color.ppm");
      check_image_size(img, obs.camera, dir / "color.ppm");
      obs.color.resize(n);
      obs.mask.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        bool white = true;
        for (int c = 0; c < 3; ++c) {
          obs.color[i][c] = img.pixels[3 * i + c] / 255.0;
          white = white && img.pixels[3 * i + c] == 255;
        }
        obs.mask[i] = white ? 0 : 1;
      }
      break;
    }
  }
  try {
    obs.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
  return obs;
}

std::vector<Observation> read_observation_set(const fs::path& root) {
  if (!fs::is_directory(root)) throw FormatError("observation directory " + root.string() + " does not exist");
  if (fs::exists(root / "kind.txt")) return {read_observation(root)};
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "kind.txt")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<Observation> out;
  out.reserve(dirs.size());
  for (const auto& d : dirs) out.push_back(read_observation(d));
  return out;
}

}  // namespace drc
