#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "drc/cli.hpp"
#include "drc/error.hpp"
#include "drc/eval.hpp"
#include "drc/fusion.hpp"
#include "drc/gradcheck.hpp"
#include "drc/grid_io.hpp"
#include "drc/observation_io.hpp"
#include "drc/renderer.hpp"
#include "internal.hpp"

namespace drc::cli {

namespace {

std::string fmt(double v) { return format_double(v); }

std::string view_dir_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "view_%03d", index);
  return buf;
}

/// Noise stream for one view of a render call.
std::uint64_t noise_seed(std::uint64_t seed, int view) {
  return seed * 0x100000001b3ULL + static_cast<std::uint64_t>(view) + 1;
}

bool is_binary_grid_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open grid file " + path.string());
  std::string magic, version, kind;
  in >> magic >> version >> kind;
  if (magic != "DRC-GRID") throw FormatError(path.string() + ": not a DRC-GRID file");
  return kind.rfind("bin:", 0) == 0;
}

struct Truth {
  BinaryGrid occupancy;
  std::optional<AuxGrid> aux;
};

/// A ground-truth grid: a binary grid file, or a DRC-GRID field binarized at
/// occupancy 0.5 (its aux payload comes along if present).
Truth load_truth(const fs::path& path) {
  if (is_binary_grid_file(path)) return Truth{read_binary_grid(path), std::nullopt};
  GridFile g = read_grid(path);
  std::vector<std::uint8_t> occ(g.occupancy.size());
  for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = 1.0 - g.occupancy[i] >= 0.5 ? 1 : 0;
  return Truth{BinaryGrid(g.occupancy.geometry(), std::move(occ)), std::move(g.aux)};
}

OccupancyGrid load_prediction(const fs::path& path) {
  if (is_binary_grid_file(path)) return to_occupancy(read_binary_grid(path));
  return read_grid(path).occupancy;
}

std::vector<Observation> load_observations(const std::string& dir) {
  if (dir.empty()) throw UsageError("--obs is required");
  if (!fs::is_directory(dir)) throw FormatError("observation directory " + dir + " does not exist");
  std::vector<Observation> obs = read_observation_set(dir);
  if (obs.empty()) throw FormatError("no observation bundles under " + dir);
  return obs;
}

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
  fs::create_directories(out);
  return fs::path(out);
}

}  // namespace

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> values;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      values.push_back(parse_double(tok));
    } catch (const FormatError&) {
      throw UsageError(std::string(what) + ": '" + tok + "' is not a number");
    }
  }
  if (values.size() != expected) {
    throw UsageError(std::string(what) + " expects " + std::to_string(expected) + " comma-separated values");
  }
  return values;
}

Dims parse_dims(const std::string& text) {
  const bool cube = text.find(',') == std::string::npos;
  const std::vector<double> v = parse_list(text, cube ? 1 : 3, "--dims");
  for (double d : v) {
    if (d != static_cast<int>(d) || d < 1) throw UsageError("--dims values must be positive integers");
  }
  if (cube) return Dims{static_cast<int>(v[0]), static_cast<int>(v[0]), static_cast<int>(v[0])};
  return Dims{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
}

GridGeometry GeometryArgs::resolve() const {
  if (!like.empty()) {
    if (is_binary_grid_file(like)) return read_binary_grid(like).geometry();
    return read_grid(like).occupancy.geometry();
  }
  const Dims d = parse_dims(dims);
  if (kind == "uniform") {
    const std::vector<double> b = parse_list(box, 6, "--box");
    return GridGeometry::uniform(d, Aabb{Vec3(b[0], b[1], b[2]), Vec3(b[3], b[4], b[5])});
  }
  if (kind == "frustum") {
    if (z_range.empty()) throw UsageError("--z-range is required for a frustum geometry");
    const std::vector<double> z = parse_list(z_range, 2, "--z-range");
    return make_frustum_geometry(d, z[0], z[1], frustum_hfov);
  }
  throw UsageError("--geometry must be uniform or frustum");
}

std::vector<Param> geometry_params(const GeometryArgs& g) {
  if (!g.like.empty()) return {{"--like", g.like}};
  std::vector<Param> p{{"--geometry", g.kind}, {"--dims", g.dims}};
  if (g.kind == "frustum") {
    p.push_back({"--z-range", g.z_range});
    p.push_back({"--frustum-hfov", fmt(g.frustum_hfov)});
  } else {
    p.push_back({"--box", g.box});
  }
  return p;
}

int ExecArgs::resolved_threads() const {
  if (threads > 0) return threads;
  if (const char* env = std::getenv("DRC_THREADS"); env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024) throw UsageError(std::string("DRC_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<int>(n);
  }
  return 1;
}

std::vector<Param> exec_params(const ExecArgs& e) {
  std::vector<Param> p{{"--deterministic", e.deterministic ? "true" : "false", true}};
  if (e.threads > 0) p.push_back({"--threads", std::to_string(e.threads)});
  return p;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::vector<Param>& params,
                    const json& seeds, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  json parameters = json::object();
  std::vector<std::string> argv{command};
  for (const Param& p : params) {
    if (p.is_switch) {
      parameters[p.flag.substr(2)] = p.value == "true";
      if (p.value == "true") argv.push_back(p.flag);
    } else {
      parameters[p.flag.substr(2)] = p.value;
      argv.push_back(p.flag + "=" + p.value);
    }
  }
  json m;
  m["tool"] = "drc";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["parameters"] = parameters;
  m["seeds"] = seeds;
  m["argv"] = argv;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  std::ofstream f(dir / "manifest.json", std::ios::trunc);
  if (!f) throw FormatError("cannot write " + (dir / "manifest.json").string());
  f << m.dump(2) << '\n';
}

void cmd_shape(const ShapeArgs& a, std::ostream& out) {
  const fs::path dir = prepare_out(a.out);
  const TestShape shape = make_test_shape(a.name, parse_dims(a.dims));
  const OccupancyGrid occ = to_occupancy(shape.occupancy);
  const std::vector<std::string> notes{"shape=" + a.name, "cavity_cells=" + std::to_string(shape.cavity.size())};
  write_binary_grid(dir / "shape.bin", shape.occupancy);
  write_grid(dir / "color.grid", occ, &shape.color, notes);
  write_grid(dir / "semantics.grid", occ, &shape.semantics, notes);
  std::vector<std::string> outputs{"shape.bin", "color.grid", "semantics.grid"};
  if (!shape.cavity.empty()) {
    std::ofstream c(dir / "cavity.txt", std::ios::trunc);
    for (std::size_t i : shape.cavity) c << i << '\n';
    outputs.push_back("cavity.txt");
  }
  write_manifest(dir, "shape", {{"--name", a.name}, {"--dims", a.dims}, {"--out", a.out}}, json::object(), {},
                 outputs);
  out << "shape " << a.name << ": " << shape.occupancy.occupied_count() << " occupied cells, "
      << shape.cavity.size() << " cavity cells -> " << dir.string() << '\n';
}

void cmd_render(const RenderArgs& a, std::ostream& out) {
  if (a.grid.empty()) throw UsageError("--grid is required");
  const ObservationKind kind = parse_observation_kind(a.kind);
  if (a.noise < 0.0) throw UsageError("--noise must be >= 0");
  if (a.noise > 0.0 && kind != ObservationKind::depth && kind != ObservationKind::semantics) {
    throw UsageError("--noise applies to depth and semantics renders only");
  }
  Truth truth = load_truth(a.grid);
  std::optional<AuxGrid> aux = std::move(truth.aux);
  if (!a.aux.empty()) {
    GridFile g = read_grid(a.aux);
    if (!g.aux) throw FormatError(a.aux + " carries no aux payload");
    aux = std::move(g.aux);
  }
  const bool needs_aux = kind == ObservationKind::color || kind == ObservationKind::semantics;
  if (needs_aux) {
    const AuxKind want = kind == ObservationKind::color ? AuxKind::color : AuxKind::semantics;
    if (!aux || aux->kind() != want) {
      throw std::invalid_argument(std::string("rendering ") + a.kind + " needs a " +
                                  (want == AuxKind::color ? "color" : "semantics") + " aux grid (--aux)");
    }
  }
  const fs::path dir = prepare_out(a.out);
  ViewRingOptions ring;
  ring.width = a.size;
  ring.height = a.size;
  ring.hfov_deg = a.hfov;
  const std::vector<Camera> cams =
      sample_view_ring(a.views, a.elevation_min, a.elevation_max, a.radius, a.seed, ring);
  std::vector<std::string> outputs;
  for (std::size_t v = 0; v < cams.size(); ++v) {
    Observation o = render(truth.occupancy, needs_aux ? &*aux : nullptr, cams[v], kind);
    if (a.noise > 0.0) o = add_depth_noise(o, a.noise, noise_seed(a.seed, static_cast<int>(v)));
    const std::string name = view_dir_name(static_cast<int>(v));
    write_observation(dir / name, o);
    outputs.push_back(name);
  }
  std::vector<Param> params{{"--grid", a.grid},
                            {"--kind", a.kind},
                            {"--views", std::to_string(a.views)},
                            {"--noise", fmt(a.noise)},
                            {"--seed", std::to_string(a.seed)},
                            {"--elevation", fmt(a.elevation_min) + "," + fmt(a.elevation_max)},
                            {"--radius", fmt(a.radius)},
                            {"--size", std::to_string(a.size)},
                            {"--hfov", fmt(a.hfov)},
                            {"--out", a.out}};
  if (!a.aux.empty()) params.push_back({"--aux", a.aux});
  std::vector<std::string> inputs{a.grid};
  if (!a.aux.empty()) inputs.push_back(a.aux);
  write_manifest(dir, "render", params, json{{"views", a.seed}, {"noise", a.seed}}, inputs, outputs);
  out << "rendered " << cams.size() << ' ' << a.kind << " views -> " << dir.string() << '\n';
}

void cmd_fit(const FitArgs& a, std::ostream& out) {
  std::vector<Observation> obs = load_observations(a.obs);
  if (a.use_views < 0) throw UsageError("--views must be >= 0");
  if (a.use_views > 0) {
    if (static_cast<std::size_t>(a.use_views) > obs.size()) {
      throw std::invalid_argument("--views " + std::to_string(a.use_views) + " but only " +
                                  std::to_string(obs.size()) + " bundles in " + a.obs);
    }
    obs.erase(obs.begin() + a.use_views, obs.end());
  }
  const ObservationKind kind = a.kind.empty() ? obs.front().kind : parse_observation_kind(a.kind);
  const GridGeometry geometry = a.geometry.resolve();
  FitConfig config = a.config;
  config.deterministic = a.exec.deterministic;
  config.threads = a.exec.resolved_threads();
  const fs::path dir = prepare_out(a.out);

  const FitResult r = fit(obs, geometry, kind, config);
  write_grid(dir / "fit.grid", r.occupancy, r.aux ? &*r.aux : nullptr,
             {"source=fit", std::string("kind=") + to_string(kind),
              "iterations=" + std::to_string(config.iterations)});
  write_loss_log(dir / "loss.tsv", r.report, kind);

  std::vector<Param> params{{"--obs", a.obs}};
  if (!a.kind.empty()) params.push_back({"--kind", a.kind});
  for (Param& p : geometry_params(a.geometry)) params.push_back(std::move(p));
  params.insert(params.end(), {{"--views", std::to_string(a.use_views)},
                               {"--iterations", std::to_string(config.iterations)},
                               {"--rays", std::to_string(config.rays_per_iteration)},
                               {"--views-per-iteration", std::to_string(config.views_per_iteration)},
                               {"--fg-weight", fmt(config.foreground_weight)},
                               {"--step", fmt(config.adam.step_size)},
                               {"--seed", std::to_string(config.seed)},
                               {"--all-pixels", config.all_pixels ? "true" : "false", true}});
  for (Param& p : exec_params(a.exec)) params.push_back(std::move(p));
  params.push_back({"--out", a.out});
  write_manifest(dir, "fit", params, json{{"rays", config.seed}}, {a.obs}, {"fit.grid", "loss.tsv"});

  const double final_loss = r.report.loss_trace.empty() ? 0.0 : r.report.loss_trace.back();
  out << "fit " << to_string(kind) << ": " << obs.size() << " views, " << config.iterations
      << " iterations, final loss " << final_loss << ", " << r.report.wall_seconds << " s -> " << dir.string()
      << '\n';
}

void cmd_fuse(const FuseArgs& a, std::ostream& out) {
  const std::vector<Observation> obs = load_observations(a.obs);
  for (const Observation& o : obs) {
    if (o.kind != ObservationKind::depth) {
      throw std::invalid_argument(std::string("fusion needs depth observations, got ") + to_string(o.kind));
    }
  }
  const GridGeometry geometry = a.geometry.resolve();
  const fs::path dir = prepare_out(a.out);
  const FusedOccupancy fused = fuse_depth(obs, geometry);
  std::size_t invalid = 0;
  for (auto v : fused.valid) invalid += v ? 0 : 1;
  write_grid(dir / "fused.grid", fused_to_occupancy(fused), nullptr,
             {"source=fusion", "invalid_cells=" + std::to_string(invalid), "invalid_as=empty"});
  write_binary_grid(dir / "valid.bin", BinaryGrid(geometry, fused.valid));
  std::vector<Param> params{{"--obs", a.obs}};
  for (Param& p : geometry_params(a.geometry)) params.push_back(std::move(p));
  params.push_back({"--out", a.out});
  write_manifest(dir, "fuse", params, json::object(), {a.obs}, {"fused.grid", "valid.bin"});
  out << "fused " << obs.size() << " depth views, " << invalid << " unobserved cells -> " << dir.string() << '\n';
}

EvalOutcome cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.pred.empty() || a.gt.empty()) throw UsageError("--pred and --gt are required");
  const OccupancyGrid pred = load_prediction(a.pred);
  const Truth gt = load_truth(a.gt);
  if (!(pred.geometry() == gt.occupancy.geometry())) {
    throw std::invalid_argument("prediction and ground truth grids have different geometries");
  }
  const IoUResult r = best_threshold(pred, gt.occupancy);
  if (!a.curve.empty()) {
    std::ofstream c(a.curve, std::ios::trunc);
    if (!c) throw FormatError("cannot write " + a.curve);
    c << "threshold\tiou\n";
    for (const auto& [t, iou] : r.curve) c << fmt(t) << '\t' << fmt(iou) << '\n';
  }
  out << "pred\tbest_iou\tbest_threshold\n" << a.pred << '\t' << fmt(r.best_iou) << '\t' << fmt(r.best_threshold)
      << '\n';
  return EvalOutcome{r.best_iou, r.best_threshold};
}

std::vector<DefaultEntry> defaults_table() {
  const FitConfig fit;
  const CostParams cost;
  return {
      {"grid.dims", std::to_string(Defaults::dims), "cells per axis for shapes and fits"},
      {"grid.box", "-0.5,-0.5,-0.5,0.5,0.5,0.5", "uniform grid bounds (meters)"},
      {"render.views", std::to_string(Defaults::views), "views per render"},
      {"render.elevation", format_double(Defaults::elevation_min) + "," + format_double(Defaults::elevation_max),
       "camera elevation range (degrees)"},
      {"render.radius", format_double(Defaults::view_radius), "camera distance from the target (meters)"},
      {"render.size", std::to_string(Defaults::image_size), "image width and height (pixels)"},
      {"render.hfov", format_double(Defaults::hfov_deg), "horizontal field of view (degrees)"},
      {"render.noise", "0", "max uniform depth noise (meters)"},
      {"fit.iterations", std::to_string(fit.iterations), "optimizer iterations"},
      {"fit.rays", std::to_string(fit.rays_per_iteration), "rays per iteration, split across views"},
      {"fit.views_per_iteration", "all if <= 5 else 3", "views sampled per iteration"},
      {"fit.fg_weight", format_double(fit.foreground_weight), "loss weight of foreground rays"},
      {"fit.step", format_double(fit.adam.step_size), "Adam step size"},
      {"fit.beta1", format_double(fit.adam.beta1), "Adam first-moment decay"},
      {"fit.beta2", format_double(fit.adam.beta2), "Adam second-moment decay"},
      {"fit.epsilon", format_double(fit.adam.epsilon), "Adam epsilon"},
      {"fit.init_x", "0.5", "initial emptiness (logit 0)"},
      {"cost.escape_depth", format_double(cost.escape_depth), "depth of the escape event (meters)"},
      {"cost.semantic_escape_depth", format_double(cost.semantic_escape_depth),
       "escape depth for depth+semantics (meters)"},
      {"cost.probability_floor", format_double(cost.probability_floor), "floor inside -log p"},
      {"cost.escape_color", "1,1,1", "color predicted by the escape event"},
      {"eval.threshold_step", "0.01", "IoU threshold sweep step"},
      {"gradcheck.trials", std::to_string(Defaults::gradcheck_trials), "random instances per kind"},
      {"gradcheck.step", format_double(GradCheckOptions{}.step), "central-difference step"},
      {"gradcheck.tolerance", format_double(GradCheckOptions{}.relative_tolerance), "max relative error"},
      {"repro.noise", format_double(Defaults::repro_noise), "noisy-depth setting (meters)"},
  };
}

namespace {

void add_geometry_options(CLI::App* cmd, GeometryArgs& g) {
  cmd->add_option("--like", g.like, "Take the grid geometry from this grid file");
  cmd->add_option("--geometry", g.kind, "uniform or frustum")->check(CLI::IsMember({"uniform", "frustum"}));
  cmd->add_option("--dims", g.dims, "N or nx,ny,nz");
  cmd->add_option("--box", g.box, "Uniform bounds x0,y0,z0,x1,y1,z1");
  cmd->add_option("--z-range", g.z_range, "Frustum depth range z_min,z_max");
  cmd->add_option("--frustum-hfov", g.frustum_hfov, "Frustum horizontal field of view (degrees)");
}

void add_exec_options(CLI::App* cmd, ExecArgs& e) {
  cmd->add_flag("--deterministic", e.deterministic, "Force sequential, order-fixed reductions");
  cmd->add_option("--threads", e.threads, "Worker threads (default: DRC_THREADS or 1)")->check(CLI::NonNegativeNumber);
}

int gradcheck_main(const std::string& kind_name, int trials, std::uint64_t seed, bool inject_bug, std::ostream& out) {
  std::vector<ObservationKind> kinds;
  if (kind_name == "all") {
    kinds = {ObservationKind::mask, ObservationKind::depth, ObservationKind::semantics, ObservationKind::color};
  } else {
    kinds = {parse_observation_kind(kind_name)};
  }
  GradCheckOptions opts;
  opts.trials = trials;
  opts.seed = seed;
  opts.inject_bug = inject_bug;
  bool ok = true;
  out << "kind\ttrials\tcomponents\tmax_rel_error\tmax_abs_error\tresult\n";
  for (ObservationKind k : kinds) {
    const GradCheckResult r = check_gradients(k, opts);
    out << to_string(k) << '\t' << r.trials << '\t' << r.components << '\t' << r.max_relative_error << '\t'
        << r.max_absolute_error << '\t' << (r.passed() ? "PASS" : "FAIL") << '\n';
    ok = ok && r.passed();
  }
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentiable ray consistency: render, fit, fuse and evaluate voxel occupancy grids", "drc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  ShapeArgs shape;
  auto* shape_cmd = app.add_subcommand("shape", "Write a procedural ground-truth shape");
  shape_cmd->add_option("--name", shape.name, "sphere, cuboid or chair_like")
      ->required()
      ->check(CLI::IsMember({"sphere", "cuboid", "chair_like"}));
  shape_cmd->add_option("--dims", shape.dims, "N or nx,ny,nz");
  shape_cmd->add_option("--out", shape.out, "Output directory")->required();

  RenderArgs render_args;
  std::string elevation;
  auto* render_cmd = app.add_subcommand("render", "Render observation bundles of a ground-truth grid");
  render_cmd->add_option("--grid", render_args.grid, "Binary grid or DRC-GRID file")->required();
  render_cmd->add_option("--aux", render_args.aux, "Grid file providing the color or semantics payload");
  render_cmd->add_option("--kind", render_args.kind, "mask, depth, semantics or color")
      ->check(CLI::IsMember({"mask", "depth", "semantics", "color"}));
  render_cmd->add_option("--views", render_args.views, "Number of views")->check(CLI::PositiveNumber);
  render_cmd->add_option("--noise", render_args.noise, "Max uniform depth noise (meters)");
  render_cmd->add_option("--seed", render_args.seed, "View and noise seed");
  render_cmd->add_option("--elevation", elevation, "Elevation range min,max (degrees)");
  render_cmd->add_option("--radius", render_args.radius, "Camera distance (meters)");
  render_cmd->add_option("--size", render_args.size, "Image width and height")->check(CLI::PositiveNumber);
  render_cmd->add_option("--hfov", render_args.hfov, "Horizontal field of view (degrees)");
  render_cmd->add_option("--out", render_args.out, "Output directory")->required();

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit an occupancy grid to observation bundles");
  fit_cmd->add_option("--obs", fit_args.obs, "Directory of observation bundles")->required();
  fit_cmd->add_option("--kind", fit_args.kind, "Supervision kind (default: from the bundles)")
      ->check(CLI::IsMember({"mask", "depth", "semantics", "color"}));
  add_geometry_options(fit_cmd, fit_args.geometry);
  fit_cmd->add_option("--views", fit_args.use_views, "Use only the first N bundles (0 = all)");
  fit_cmd->add_option("--iterations", fit_args.config.iterations)->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--rays", fit_args.config.rays_per_iteration, "Rays per iteration")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--views-per-iteration", fit_args.config.views_per_iteration, "0 = automatic")
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--fg-weight", fit_args.config.foreground_weight, "Foreground ray weight");
  fit_cmd->add_option("--step", fit_args.config.adam.step_size, "Adam step size");
  fit_cmd->add_option("--seed", fit_args.config.seed, "Ray sampling seed");
  fit_cmd->add_flag("--all-pixels", fit_args.config.all_pixels, "Use every pixel instead of sampling");
  add_exec_options(fit_cmd, fit_args.exec);
  fit_cmd->add_option("--out", fit_args.out, "Output directory")->required();

  FuseArgs fuse_args;
  auto* fuse_cmd = app.add_subcommand("fuse", "Depth fusion baseline");
  fuse_cmd->add_option("--obs", fuse_args.obs, "Directory of depth bundles")->required();
  add_geometry_options(fuse_cmd, fuse_args.geometry);
  fuse_cmd->add_option("--out", fuse_args.out, "Output directory")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "IoU of a predicted grid against ground truth");
  eval_cmd->add_option("--pred", eval_args.pred, "Predicted grid")->required();
  eval_cmd->add_option("--gt", eval_args.gt, "Ground-truth grid")->required();
  eval_cmd->add_option("--curve", eval_args.curve, "Write the threshold/IoU curve here (TSV)");

  std::string gc_kind = "all";
  int gc_trials = Defaults::gradcheck_trials;
  std::uint64_t gc_seed = 0;
  bool gc_bug = false;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Check analytic loss gradients against finite differences");
  gc_cmd->add_option("--kind", gc_kind, "mask, depth, semantics, color or all")
      ->check(CLI::IsMember({"all", "mask", "depth", "semantics", "color"}));
  gc_cmd->add_option("--trials", gc_trials, "Random instances per kind")->check(CLI::Range(1, 10000000));
  gc_cmd->add_option("--seed", gc_seed);
  gc_cmd->add_flag("--inject-bug", gc_bug)->group("");

  ReproArgs repro;
  std::string repro_shapes = "sphere,chair_like";
  auto* repro_cmd = app.add_subcommand("repro", "Shape -> render -> fit/fuse -> eval for mask, depth, noisy depth");
  repro_cmd->add_option("--out", repro.out, "Output directory")->required();
  repro_cmd->add_option("--shapes", repro_shapes, "Comma-separated shape names");
  repro_cmd->add_option("--seed", repro.seed);
  repro_cmd->add_option("--dims", repro.dims)->check(CLI::Range(8, 256));
  repro_cmd->add_option("--views", repro.views)->check(CLI::PositiveNumber);
  repro_cmd->add_option("--noise", repro.noise, "Noisy-depth amplitude (meters)")->check(CLI::NonNegativeNumber);
  repro_cmd->add_option("--iterations", repro.iterations)->check(CLI::NonNegativeNumber);
  add_exec_options(repro_cmd, repro.exec);

  std::string manifest_path;
  auto* rerun_cmd = app.add_subcommand("rerun", "Re-run the command recorded in a manifest.json");
  rerun_cmd->add_option("--manifest", manifest_path)->required();

  auto* defaults_cmd = app.add_subcommand("defaults", "Print the table of numeric defaults");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (shape_cmd->parsed()) {
      cmd_shape(shape, out);
    } else if (render_cmd->parsed()) {
      if (!elevation.empty()) {
        const std::vector<double> el = parse_list(elevation, 2, "--elevation");
        render_args.elevation_min = el[0];
        render_args.elevation_max = el[1];
      }
      cmd_render(render_args, out);
    } else if (fit_cmd->parsed()) {
      cmd_fit(fit_args, out);
    } else if (fuse_cmd->parsed()) {
      cmd_fuse(fuse_args, out);
    } else if (eval_cmd->parsed()) {
      cmd_eval(eval_args, out);
    } else if (gc_cmd->parsed()) {
      return gradcheck_main(gc_kind, gc_trials, gc_seed, gc_bug, out);
    } else if (repro_cmd->parsed()) {
      repro.shapes.clear();
      std::stringstream ss(repro_shapes);
      for (std::string s; std::getline(ss, s, ',');) repro.shapes.push_back(s);
      cmd_repro(repro, out);
    } else if (rerun_cmd->parsed()) {
      std::ifstream f(manifest_path);
      if (!f) throw FormatError("cannot open manifest " + manifest_path);
      json m;
      try {
        f >> m;
        return run(m.at("argv").get<std::vector<std::string>>(), out, err);
      } catch (const json::exception& e) {
        throw FormatError(manifest_path + ": " + e.what());
      }
    } else if (defaults_cmd->parsed()) {
      out << "name\tvalue\tmeaning\n";
      for (const DefaultEntry& d : defaults_table()) out << d.name << '\t' << d.value << '\t' << d.meaning << '\n';
    }
  } catch (const UsageError& e) {
    err << "drc: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "drc: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace drc::cli
