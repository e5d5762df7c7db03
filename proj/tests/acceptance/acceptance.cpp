// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "drc/cli.hpp"
#include "drc/consistency.hpp"
#include "drc/eval.hpp"
#include "drc/fitter.hpp"
#include "drc/fusion.hpp"
#include "drc/renderer.hpp"
#include "drc/traversal.hpp"
#include "oracles.hpp"

using namespace drc;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;
const Dims kDims{32, 32, 32};

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = Outcome{false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s  %2d  %-28s %s  [%.2f s]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Random single-ray instance of any cost kind.
struct Instance {
  std::vector<double> x;
  std::vector<double> depths;
  std::vector<double> p;  // payload, cell-major
  int channels = 0;
  RayObservation obs;
};

Instance random_instance(std::mt19937_64& rng, ObservationKind kind, int max_cells, double x_lo = 0.0,
                         double x_hi = 1.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, max_cells);
  Instance in;
  const int n = len(rng);
  double t = 0.5 + u(rng);
  for (int i = 0; i < n; ++i) {
    in.x.push_back(x_lo + (x_hi - x_lo) * u(rng));
    const double step = 0.05 + 0.3 * u(rng);
    in.depths.push_back(t + 0.5 * step);
    t += step;
  }
  switch (kind) {
    case ObservationKind::mask: in.obs = RayObservation::mask(u(rng) < 0.5 ? 0.0 : 1.0); break;
    case ObservationKind::depth: in.obs = RayObservation::depth_of(0.3 + (t + 0.5) * u(rng)); break;
    case ObservationKind::semantics: {
      in.channels = 2 + static_cast<int>(u(rng) * 3);
      for (int i = 0; i < n; ++i) {
        std::vector<double> w(in.channels);
        double s = 0.0;
        for (double& v : w) s += (v = 0.2 + u(rng));
        for (double v : w) in.p.push_back(v / s);
      }
      in.obs = RayObservation::semantics(0.3 + (t + 0.5) * u(rng), static_cast<int>(u(rng) * in.channels));
      break;
    }
    case ObservationKind::color:
      in.channels = 3;
      for (int i = 0; i < 3 * n; ++i) in.p.push_back(u(rng));
      in.obs = RayObservation::color_of(Rgb{u(rng), u(rng), u(rng)});
      break;
  }
  return in;
}

EventCosts costs_of(const Instance& in, ObservationKind kind) {
  switch (kind) {
    case ObservationKind::mask: return cost_mask(in.x.size(), in.obs.background);
    case ObservationKind::depth: return cost_depth(in.depths, in.obs.depth);
    case ObservationKind::semantics:
      return cost_semantic(in.depths, in.p, in.channels, in.obs.depth, in.obs.label);
    case ObservationKind::color: return cost_color(in.p, in.obs.color);
  }
  return {};
}

// Loss written out directly from the cost definitions, so the payload can be
// perturbed off the simplex.
double direct_loss(const Instance& in, ObservationKind kind, const std::vector<double>& x,
                   const std::vector<double>& p) {
  const CostParams cp;
  std::vector<double> psi;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    switch (kind) {
      case ObservationKind::mask: psi.push_back(in.obs.background); break;
      case ObservationKind::depth: psi.push_back(std::abs(in.depths[i] - in.obs.depth)); break;
      case ObservationKind::semantics:
        psi.push_back(std::abs(1.0 / in.depths[i] - 1.0 / in.obs.depth) -
                      cp.nll_weight * std::log(std::max(p[i * in.channels + in.obs.label], cp.probability_floor)));
        break;
      case ObservationKind::color: {
        double s = 0.0;
        for (int c = 0; c < 3; ++c) s += std::pow(p[3 * i + c] - in.obs.color[c], 2);
        psi.push_back(0.5 * s);
        break;
      }
    }
  }
  switch (kind) {
    case ObservationKind::mask: psi.push_back(1.0 - in.obs.background); break;
    case ObservationKind::depth: psi.push_back(std::abs(cp.escape_depth - in.obs.depth)); break;
    case ObservationKind::semantics:
      psi.push_back(std::abs(1.0 / cp.semantic_escape_depth - 1.0 / in.obs.depth) +
                    cp.nll_weight * std::log(static_cast<double>(in.channels)));
      break;
    case ObservationKind::color: {
      double s = 0.0;
      for (int c = 0; c < 3; ++c) s += std::pow(1.0 - in.obs.color[c], 2);
      psi.push_back(0.5 * s);
      break;
    }
  }
  return oracle::expected_cost(x, psi);
}

const ObservationKind kKinds[] = {ObservationKind::mask, ObservationKind::depth, ObservationKind::semantics,
                                  ObservationKind::color};

// Sum of probabilities of all 2^N configurations, each paying psi of its first
// occupied cell.
double enumerate_expectation(const std::vector<double>& x, const std::vector<double>& psi) {
  const std::size_t n = x.size();
  double total = 0.0;
  for (std::uint32_t m = 0; m < (1u << n); ++m) {  // bit set = cell empty
    double prob = 1.0;
    std::size_t first = n;
    for (std::size_t j = 0; j < n; ++j) {
      const bool empty = (m >> j) & 1u;
      prob *= empty ? x[j] : 1.0 - x[j];
      if (!empty && first == n) first = j;
    }
    total += prob * psi[first];
  }
  return total;
}

std::vector<Observation> render_ring(const TestShape& s, ObservationKind kind, int views, double noise) {
  std::vector<Observation> out;
  int v = 0;
  for (const Camera& c : sample_view_ring(views, -20, 30, 2.0, kSeed)) {
    const AuxGrid* aux = kind == ObservationKind::color ? &s.color : nullptr;
    Observation o = render(s.occupancy, aux, c, kind);
    // Same per-view noise streams as the render command.
    if (noise > 0) o = add_depth_noise(o, noise, kSeed * 0x100000001b3ULL + static_cast<std::uint64_t>(v) + 1);
    out.push_back(std::move(o));
    ++v;
  }
  return out;
}

struct FitRun {
  FitResult result;
  IoUResult iou;
  double seconds = 0.0;
};

FitRun fit_shape(const TestShape& s, ObservationKind kind, int views, double noise = 0.0) {
  const std::vector<Observation> obs = render_ring(s, kind, views, noise);
  FitConfig cfg;
  cfg.seed = kSeed;
  const auto t0 = std::chrono::steady_clock::now();
  FitResult r = fit(obs, s.occupancy.geometry(), kind, cfg);
  const double secs = seconds_since(t0);
  const IoUResult iou = best_threshold(r.occupancy, s.occupancy);
  return FitRun{std::move(r), iou, secs};
}

double cavity_empty_fraction(const TestShape& s, const OccupancyGrid& x) {
  std::size_t below = 0;
  for (std::size_t c : s.cavity) below += 1.0 - x[c] < 0.5 ? 1 : 0;
  return static_cast<double>(below) / static_cast<double>(s.cavity.size());
}

// Shapes and fits shared across criteria.
struct Fixtures {
  TestShape sphere = make_test_shape("sphere", kDims);
  TestShape chair = make_test_shape("chair_like", kDims);
  std::optional<FitRun> sphere_depth, chair_depth, sphere_mask, chair_mask;
} fx;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

int main() {
  report(1, "probability normalization", [] {
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> len(1, 64);
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int r = 0; r < 10000; ++r) {
      std::vector<double> x(len(rng));
      for (double& v : x) v = u(rng);
      double s = 0.0;
      for (double p : event_probabilities(x)) s += p;
      worst = std::max(worst, std::abs(s - 1.0));
    }
    const double secs = seconds_since(t0);
    return Outcome{worst <= 1e-12 && secs < 1.0, fmt("max |sum-1| = %.2e", worst) + fmt(", %.3f s", secs)};
  });

  report(2, "gradient correctness", [] {
    std::mt19937_64 rng(kSeed + 1);
    const double h = 1e-6, tol = 1e-5, floor = 1e-8;
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    long bad = 0, checked = 0;
    auto compare = [&](double a, double n) {
      const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor / tol});
      worst = std::max(worst, rel);
      bad += rel > tol ? 1 : 0;
      ++checked;
    };
    for (ObservationKind kind : kKinds) {
      for (int trial = 0; trial < 200; ++trial) {
        // x and payloads kept off the boundaries so +-h stays in the domain.
        const Instance in = random_instance(rng, kind, 12, 0.02, 0.98);
        const EventCosts c = costs_of(in, kind);
        const std::vector<double> gx = ray_loss_grad_x(in.x, c.psi);
        for (std::size_t k = 0; k < in.x.size(); ++k) {
          std::vector<double> xp = in.x, xm = in.x;
          xp[k] += h;
          xm[k] -= h;
          compare(gx[k], (direct_loss(in, kind, xp, in.p) - direct_loss(in, kind, xm, in.p)) / (2 * h));
        }
        if (c.channels == 0) continue;
        const std::vector<double> gp = ray_loss_grad_p(in.x, c);
        for (std::size_t k = 0; k < in.p.size(); ++k) {
          std::vector<double> pp = in.p, pm = in.p;
          pp[k] += h;
          pm[k] -= h;
          compare(gp[k], (direct_loss(in, kind, in.x, pp) - direct_loss(in, kind, in.x, pm)) / (2 * h));
        }
      }
    }
    const double secs = seconds_since(t0);
    return Outcome{bad == 0 && secs < 10.0, fmt("max rel err = %.2e over ", worst) + std::to_string(checked) +
                                                " components, " + std::to_string(bad) + " over tolerance"};
  });

  report(3, "brute-force oracle", [] {
    std::mt19937_64 rng(kSeed + 2);
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (ObservationKind kind : kKinds) {
      for (int trial = 0; trial < 500; ++trial) {
        const Instance in = random_instance(rng, kind, 12);
        const EventCosts c = costs_of(in, kind);
        worst = std::max(worst, std::abs(ray_loss(in.x, c.psi) - enumerate_expectation(in.x, c.psi)));
      }
    }
    const double secs = seconds_since(t0);
    return Outcome{worst <= 1e-10 && secs < 30.0, fmt("max |diff| = %.2e", worst)};
  });

  report(4, "closed-form mask loss", [] {
    std::mt19937_64 rng(kSeed + 3);
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
      const Instance in = random_instance(rng, ObservationKind::mask, 64);
      double prod = 1.0;
      for (double v : in.x) prod *= v;
      const double expected = ray_loss(in.x, cost_mask(in.x.size(), in.obs.background).psi);
      worst = std::max(worst, std::abs(expected - std::abs(prod - in.obs.background)));
    }
    return Outcome{worst <= 1e-12, fmt("max |diff| = %.2e", worst)};
  });

  report(5, "traversal oracle", [] {
    std::mt19937_64 rng(kSeed + 4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const GridGeometry uni = GridGeometry::uniform(Dims{12, 10, 8}, Aabb{Vec3(-1, -0.6, -0.8), Vec3(1.1, 0.9, 0.5)});
    const GridGeometry fru = make_frustum_geometry(Dims{12, 10, 8}, 0.6, 3.0, 55.0);
    int mismatches = 0, rays = 0;
    double worst_chord = 0.0;
    for (const GridGeometry* g : {&uni, &fru}) {
      const double step = 1e-4 * oracle::min_cell_extent(*g);
      for (int k = 0; k < 1000; ++k) {
        Vec3 o, d;
        if (g->kind() == GeometryKind::uniform) {
          o = Vec3(u(rng), u(rng), u(rng)).normalized() * 3.0;
          d = (Vec3(u(rng), u(rng), u(rng)) * 0.8 - o).normalized();
        } else {
          o = Vec3(u(rng), u(rng), u(rng)) * 0.3;
          d = Vec3(u(rng) * 0.45, u(rng) * 0.45, 1.0).normalized();
        }
        const RayTrace t = trace(*g, Ray{o, d});
        std::vector<std::size_t> cells;
        double len = 0.0;
        for (const TraceEntry& e : t.entries) {
          cells.push_back(e.cell);
          len += e.length();
        }
        ++rays;
        if (cells != oracle::dense_cells(*g, o, d, step)) ++mismatches;
        const auto chord = oracle::clip(*g, o, d);
        const double want = chord ? chord->second - chord->first : 0.0;
        worst_chord = std::max(worst_chord, std::abs(len - want));
      }
    }
    return Outcome{mismatches == 0 && worst_chord <= 1e-9,
                   std::to_string(mismatches) + "/" + std::to_string(rays) + " sequence mismatches, " +
                       fmt("max chord diff = %.2e", worst_chord)};
  });

  report(6, "render/loss closure", [] {
    double worst = 0.0;
    for (const TestShape* s : {&fx.sphere, &fx.chair}) {
      std::vector<double> x(s->occupancy.size());
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = s->occupancy.occupied(i) ? 0.0 : 1.0;
      const OccupancyGrid gt(s->occupancy.geometry(), x);
      for (ObservationKind kind : {ObservationKind::mask, ObservationKind::depth}) {
        for (const Observation& o : render_ring(*s, kind, 5, 0.0)) {
          worst = std::max(worst, view_loss(gt, nullptr, all_pixel_rays(o, 1.0)).loss);
        }
      }
    }
    return Outcome{worst <= 1e-9, fmt("max view loss = %.2e", worst)};
  });

  report(7, "desk-scale reconstruction", [] {
    fx.sphere_depth = fit_shape(fx.sphere, ObservationKind::depth, 5);
    fx.chair_depth = fit_shape(fx.chair, ObservationKind::depth, 5);
    fx.sphere_mask = fit_shape(fx.sphere, ObservationKind::mask, 5);
    fx.chair_mask = fit_shape(fx.chair, ObservationKind::mask, 5);
    double slowest = 0.0;
    for (const auto* r : {&fx.sphere_depth, &fx.chair_depth, &fx.sphere_mask, &fx.chair_mask}) {
      slowest = std::max(slowest, (*r)->seconds);
    }
    const bool ok = fx.sphere_depth->iou.best_iou >= 0.90 && fx.chair_depth->iou.best_iou >= 0.90 &&
                    fx.sphere_mask->iou.best_iou >= 0.80 && fx.chair_mask->iou.best_iou >= 0.80 && slowest < 300.0;
    return Outcome{ok, fmt("depth IoU sphere %.4f", fx.sphere_depth->iou.best_iou) +
                           fmt(" chair %.4f", fx.chair_depth->iou.best_iou) +
                           fmt("; mask IoU sphere %.4f", fx.sphere_mask->iou.best_iou) +
                           fmt(" chair %.4f", fx.chair_mask->iou.best_iou) + fmt("; slowest fit %.1f s", slowest)};
  });

  report(8, "concavity contrast", [] {
    if (!fx.chair_depth || !fx.chair_mask) return Outcome{false, "criterion 7 fits unavailable"};
    const double depth_empty = cavity_empty_fraction(fx.chair, fx.chair_depth->result.occupancy);
    const double mask_occupied = 1.0 - cavity_empty_fraction(fx.chair, fx.chair_mask->result.occupancy);
    return Outcome{depth_empty >= 0.80 && mask_occupied >= 0.50,
                   std::to_string(fx.chair.cavity.size()) + " cavity cells" +
                       fmt(": depth fit %.3f empty", depth_empty) + fmt(", mask fit %.3f occupied", mask_occupied)};
  });

  report(9, "noise robustness", [] {
    if (!fx.sphere_depth || !fx.chair_depth) return Outcome{false, "criterion 7 fits unavailable"};
    const double noise = 0.2;  // test shapes span a unit cube
    bool beats_fusion = true, consistent = true;
    std::string detail;
    for (const auto& [s, clean] : {std::pair{&fx.sphere, &fx.sphere_depth}, std::pair{&fx.chair, &fx.chair_depth}}) {
      const FitRun noisy = fit_shape(*s, ObservationKind::depth, 5, noise);
      const OccupancyGrid fused = fused_to_occupancy(
          fuse_depth(render_ring(*s, ObservationKind::depth, 5, noise), s->occupancy.geometry()));
      const double fusion_iou = best_threshold(fused, s->occupancy).best_iou;
      const double drop = (*clean)->iou.best_iou - noisy.iou.best_iou;
      beats_fusion = beats_fusion && noisy.iou.best_iou >= fusion_iou;
      consistent = consistent && drop < 0.10;
      detail += std::string(s == &fx.sphere ? "sphere" : "chair") + fmt(" drc %.4f", noisy.iou.best_iou) +
                fmt(" fusion %.4f", fusion_iou) + fmt(" drop %.4f; ", drop);
    }
    detail += std::string("drc>=fusion ") + (beats_fusion ? "yes" : "no") + ", drop<0.10 " +
              (consistent ? "yes" : "no");
    return Outcome{beats_fusion && consistent, detail};
  });

  report(10, "view-count monotonicity", [] {
    if (!fx.sphere_depth) return Outcome{false, "criterion 7 fits unavailable"};
    const double one = fit_shape(fx.sphere, ObservationKind::depth, 1).iou.best_iou;
    const double two = fit_shape(fx.sphere, ObservationKind::depth, 2).iou.best_iou;
    const double five = fx.sphere_depth->iou.best_iou;
    return Outcome{two >= one - 0.02 && five >= two - 0.02,
                   fmt("IoU 1 view %.4f", one) + fmt(", 2 views %.4f", two) + fmt(", 5 views %.4f", five)};
  });

  report(11, "RGB supervision", [] {
    const FitRun r = fit_shape(fx.sphere, ObservationKind::color, 8);
    const GridGeometry& g = fx.sphere.occupancy.geometry();
    double err = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
      if (!fx.sphere.occupancy.occupied(i)) continue;
      const CellCoord c = g.coord(i);
      bool surface = false;
      for (const CellCoord q : {CellCoord{c.ix + 1, c.iy, c.iz}, CellCoord{c.ix - 1, c.iy, c.iz},
                                CellCoord{c.ix, c.iy + 1, c.iz}, CellCoord{c.ix, c.iy - 1, c.iz},
                                CellCoord{c.ix, c.iy, c.iz + 1}, CellCoord{c.ix, c.iy, c.iz - 1}}) {
        surface = surface || !g.contains(q) || !fx.sphere.occupancy.occupied(g.linear_index(q));
      }
      if (!surface) continue;
      double e = 0.0;
      for (int k = 0; k < 3; ++k) e += std::abs(r.result.aux->cell(i)[k] - fx.sphere.color.cell(i)[k]);
      err += e / 3.0;
      ++n;
    }
    err /= static_cast<double>(n);
    return Outcome{err < 0.15 && r.iou.best_iou >= 0.8,
                   fmt("mean surface RGB error %.4f", err) + " over " + std::to_string(n) + " cells" +
                       fmt(", IoU %.4f", r.iou.best_iou)};
  });

  report(12, "deterministic repro", [] {
    const fs::path root = fs::temp_directory_path() / "drc_acceptance_repro";
    fs::remove_all(root);
    for (const char* run : {"a", "b"}) {
      std::ostringstream out, err;
      const int code = cli::run({"repro", "--out", (root / run).string(), "--seed", std::to_string(kSeed),
                                 "--deterministic"},
                                out, err);
      if (code != 0) return Outcome{false, "repro exited " + std::to_string(code) + ": " + err.str()};
    }
    int compared = 0, differing = 0;
    for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
      const fs::path p = e.path();
      if (!e.is_regular_file() || (p.extension() != ".grid" && p.extension() != ".bin" && p.filename() != "loss.tsv")) continue;
      const fs::path twin = root / "b" / fs::relative(p, root / "a");
      ++compared;
      if (!fs::exists(twin) || slurp(p) != slurp(twin)) ++differing;
    }
    return Outcome{compared > 0 && differing == 0,
                   std::to_string(compared) + " grid/loss files compared, " + std::to_string(differing) + " differ"};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
