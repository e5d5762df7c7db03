#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "drc/error.hpp"
#include "drc/grid_io.hpp"
#include "internal.hpp"

namespace drc::cli {

namespace {

struct Setting {
  const char* name;
  const char* kind;
  bool noisy;
};

constexpr Setting kSettings[] = {
    {"mask", "mask", false},
    {"depth", "depth", false},
    {"noisy_depth", "depth", true},
};

}  // namespace

void cmd_repro(const ReproArgs& a, std::ostream& out) {
  if (a.shapes.empty()) throw UsageError("--shapes is empty");
  const fs::path root = a.out;
  fs::create_directories(root);
  std::ostringstream log;

  struct Row {
    std::string shape;
    std::string setting;
    std::string method;
    EvalOutcome result;
  };
  std::vector<Row> rows;

  for (const std::string& shape : a.shapes) {
    const fs::path base = root / shape;
    const fs::path gt = base / "gt";
    cmd_shape(ShapeArgs{shape, std::to_string(a.dims), gt.string()}, log);
    const std::string gt_grid = (gt / "shape.bin").string();

    for (const Setting& s : kSettings) {
      RenderArgs r;
      r.grid = gt_grid;
      r.kind = s.kind;
      r.views = a.views;
      r.noise = s.noisy ? a.noise : 0.0;
      r.seed = a.seed;
      r.out = (base / ("obs_" + std::string(s.name))).string();
      cmd_render(r, log);

      FitArgs f;
      f.obs = r.out;
      f.geometry.like = gt_grid;
      f.config.iterations = a.iterations;
      f.config.seed = a.seed;
      f.exec = a.exec;
      f.out = (base / ("fit_" + std::string(s.name))).string();
      cmd_fit(f, log);
      rows.push_back({shape, s.name, "drc", cmd_eval({(fs::path(f.out) / "fit.grid").string(), gt_grid, ""}, log)});

      if (std::string(s.kind) == "depth") {
        FuseArgs u;
        u.obs = r.out;
        u.geometry.like = gt_grid;
        u.out = (base / ("fuse_" + std::string(s.name))).string();
        cmd_fuse(u, log);
        rows.push_back(
            {shape, s.name, "fusion", cmd_eval({(fs::path(u.out) / "fused.grid").string(), gt_grid, ""}, log)});
      }
    }
  }

  {
    std::ofstream f(root / "results.tsv", std::ios::trunc);
    if (!f) throw FormatError("cannot write " + (root / "results.tsv").string());
    f << "shape\tsupervision\tmethod\tbest_iou\tbest_threshold\n";
    for (const Row& r : rows) {
      f << r.shape << '\t' << r.setting << '\t' << r.method << '\t' << format_double(r.result.best_iou) << '\t'
        << format_double(r.result.best_threshold) << '\n';
    }
  }

  // Wide table: one row per shape, one column per (supervision, method).
  const std::vector<std::pair<std::string, std::string>> columns{
      {"mask", "drc"}, {"depth", "fusion"}, {"depth", "drc"}, {"noisy_depth", "fusion"}, {"noisy_depth", "drc"}};
  std::ostringstream table;
  table << "shape";
  for (const auto& [setting, method] : columns) table << '\t' << setting << '_' << method;
  table << '\n';
  for (const std::string& shape : a.shapes) {
    table << shape;
    for (const auto& [setting, method] : columns) {
      for (const Row& r : rows) {
        if (r.shape == shape && r.setting == setting && r.method == method) {
          table << '\t' << std::fixed << std::setprecision(4) << r.result.best_iou;
        }
      }
    }
    table << '\n';
  }
  {
    std::ofstream f(root / "table.tsv", std::ios::trunc);
    if (!f) throw FormatError("cannot write " + (root / "table.tsv").string());
    f << table.str();
  }

  std::string shapes;
  for (const std::string& s : a.shapes) shapes += (shapes.empty() ? "" : ",") + s;
  std::vector<Param> params{{"--out", a.out},
                            {"--shapes", shapes},
                            {"--seed", std::to_string(a.seed)},
                            {"--dims", std::to_string(a.dims)},
                            {"--views", std::to_string(a.views)},
                            {"--noise", format_double(a.noise)},
                            {"--iterations", std::to_string(a.iterations)}};
  for (Param& p : exec_params(a.exec)) params.push_back(std::move(p));
  write_manifest(root, "repro", params, json{{"views", a.seed}, {"noise", a.seed}, {"rays", a.seed}}, {},
                 {"results.tsv", "table.tsv"});
  {
    std::ofstream f(root / "repro.log", std::ios::trunc);
    f << log.str();
  }
  out << table.str();
}

}  // namespace drc::cli
