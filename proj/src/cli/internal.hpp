#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "drc/consistency.hpp"
#include "drc/fitter.hpp"
#include "drc/grid.hpp"

namespace drc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// Numeric defaults shared by the commands and printed by `drc defaults`.
struct Defaults {
  static constexpr int dims = 32;
  static constexpr int views = 5;
  static constexpr double elevation_min = -20.0;
  static constexpr double elevation_max = 30.0;
  static constexpr double view_radius = 2.0;
  static constexpr int image_size = 128;
  static constexpr double hfov_deg = 55.0;
  static constexpr double repro_noise = 0.2;
  static constexpr int gradcheck_trials = 200;
};

/// Thrown for bad command-line usage discovered after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Grid geometry given on the command line.
struct GeometryArgs {
  std::string like;  // copy geometry from this grid file
  std::string kind = "uniform";
  std::string dims = std::to_string(Defaults::dims);
  std::string box = "-0.5,-0.5,-0.5,0.5,0.5,0.5";
  std::string z_range;
  double frustum_hfov = Defaults::hfov_deg;

  GridGeometry resolve() const;
};

struct ExecArgs {
  bool deterministic = false;
  int threads = 0;  // 0: DRC_THREADS or 1

  int resolved_threads() const;
};

struct ShapeArgs {
  std::string name;
  std::string dims = std::to_string(Defaults::dims);
  std::string out;
};

struct RenderArgs {
  std::string grid;
  std::string aux;
  std::string kind = "depth";
  int views = Defaults::views;
  double noise = 0.0;
  std::uint64_t seed = 0;
  double elevation_min = Defaults::elevation_min;
  double elevation_max = Defaults::elevation_max;
  double radius = Defaults::view_radius;
  int size = Defaults::image_size;
  double hfov = Defaults::hfov_deg;
  std::string out;
};

struct FitArgs {
  std::string obs;
  std::string kind;
  GeometryArgs geometry;
  int use_views = 0;
  FitConfig config;
  ExecArgs exec;
  std::string out;
};

struct FuseArgs {
  std::string obs;
  GeometryArgs geometry;
  std::string out;
};

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string curve;
};

struct EvalOutcome {
  double best_iou = 0.0;
  double best_threshold = 0.0;
};

struct ReproArgs {
  std::string out;
  std::vector<std::string> shapes{"sphere", "chair_like"};
  std::uint64_t seed = 0;
  int dims = Defaults::dims;
  int views = Defaults::views;
  double noise = Defaults::repro_noise;
  int iterations = FitConfig{}.iterations;
  ExecArgs exec;
};

void cmd_shape(const ShapeArgs& a, std::ostream& out);
void cmd_render(const RenderArgs& a, std::ostream& out);
void cmd_fit(const FitArgs& a, std::ostream& out);
void cmd_fuse(const FuseArgs& a, std::ostream& out);
EvalOutcome cmd_eval(const EvalArgs& a, std::ostream& out);
void cmd_repro(const ReproArgs& a, std::ostream& out);

Dims parse_dims(const std::string& text);
std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* what);

/// One resolved command-line parameter. Switches are emitted as a bare flag
/// when `value` is "true" and omitted otherwise.
struct Param {
  std::string flag;
  std::string value;
  bool is_switch = false;
};

/// Writes `manifest.json` into `dir`: tool version, command, resolved
/// parameters, the equivalent argument vector, seeds, inputs and outputs.
void write_manifest(const fs::path& dir, const std::string& command, const std::vector<Param>& params,
                    const json& seeds, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs);

std::vector<Param> geometry_params(const GeometryArgs& g);
std::vector<Param> exec_params(const ExecArgs& e);

}  // namespace drc::cli
