#include "drc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "drc/renderer.hpp"

namespace drc {

namespace {

struct Instance {
  std::vector<double> x;
  std::vector<double> depths;
  std::vector<double> p;
  int channels = 0;
  RayObservation obs;
};

class Draw {
 public:
  Draw(std::uint64_t seed, int trial) : seed_(seed), trial_(static_cast<std::uint64_t>(trial)) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * hashed_uniform(seed_, trial_, counter_++); }
  int integer(int lo, int hi) { return std::min(hi, lo + static_cast<int>(uniform(0.0, 1.0) * (hi - lo + 1))); }

 private:
  std::uint64_t seed_;
  std::uint64_t trial_;
  std::uint64_t counter_ = 0;
};

Instance make_instance(ObservationKind kind, int max_cells, std::uint64_t seed, int trial) {
  Draw d(seed, trial);
  Instance in;
  const int n = d.integer(1, max_cells);
  double t = d.uniform(0.5, 1.5);
  for (int i = 0; i < n; ++i) {
    in.x.push_back(d.uniform(0.02, 0.98));
    t += d.uniform(0.01, 0.2);
    in.depths.push_back(t);
  }
  switch (kind) {
    case ObservationKind::mask:
      in.obs = RayObservation::mask(d.uniform(0.0, 1.0) < 0.5 ? 0.0 : 1.0);
      break;
    case ObservationKind::depth:
      in.obs = RayObservation::depth_of(d.uniform(0.3, t + 0.5));
      break;
    case ObservationKind::semantics: {
      in.channels = d.integer(2, 5);
      for (int i = 0; i < n; ++i) {
        std::vector<double> w(static_cast<std::size_t>(in.channels));
        double sum = 0.0;
        for (double& v : w) sum += v = d.uniform(0.1, 1.0);
        for (double v : w) in.p.push_back(v / sum);
      }
      in.obs = RayObservation::semantics(d.uniform(0.3, t + 0.5), d.integer(0, in.channels - 1));
      break;
    }
    case ObservationKind::color:
      in.channels = 3;
      for (int i = 0; i < 3 * n; ++i) in.p.push_back(d.uniform(0.0, 1.0));
      in.obs = RayObservation::color_of(Rgb{d.uniform(0.0, 1.0), d.uniform(0.0, 1.0), d.uniform(0.0, 1.0)});
      break;
  }
  return in;
}

/// Semantic event costs written out directly. The library routine requires
/// each cell's distribution to be a simplex, which a finite-difference step
/// breaks.
std::vector<double> semantic_psi(const Instance& in, std::span<const double> p) {
  const CostParams params;
  const auto k = static_cast<std::size_t>(in.channels);
  std::vector<double> psi;
  for (std::size_t i = 0; i < in.depths.size(); ++i) {
    const double prob = std::max(p[i * k + static_cast<std::size_t>(in.obs.label)], params.probability_floor);
    psi.push_back(std::abs(1.0 / in.depths[i] - 1.0 / in.obs.depth) - params.nll_weight * std::log(prob));
  }
  psi.push_back(std::abs(1.0 / params.semantic_escape_depth - 1.0 / in.obs.depth) +
                params.nll_weight * std::log(static_cast<double>(in.channels)));
  return psi;
}

EventCosts costs_for(const Instance& in, std::span<const double> p) {
  switch (in.obs.kind) {
    case ObservationKind::mask: return cost_mask(in.x.size(), in.obs.background);
    case ObservationKind::depth: return cost_depth(in.depths, in.obs.depth);
    case ObservationKind::semantics:
      return cost_semantic(in.depths, p, in.channels, in.obs.depth, in.obs.label);
    case ObservationKind::color: return cost_color(p, in.obs.color);
  }
  throw std::logic_error("unhandled observation kind");
}

}  // namespace

GradCheckResult check_gradients(ObservationKind kind, const GradCheckOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (options.max_cells < 1) throw std::invalid_argument("max_cells must be >= 1");
  if (!(options.step > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");

  GradCheckResult result;
  result.trials = options.trials;
  const double scale_floor = options.absolute_floor / options.relative_tolerance;
  auto record = [&](double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric);
    const double rel = diff / std::max({std::abs(analytic), std::abs(numeric), scale_floor});
    result.max_absolute_error = std::max(result.max_absolute_error, diff);
    result.max_relative_error = std::max(result.max_relative_error, rel);
    ++result.components;
    if (rel >= options.relative_tolerance) ++result.failures;
  };

  for (int trial = 0; trial < options.trials; ++trial) {
    Instance in = make_instance(kind, options.max_cells, options.seed, trial);
    const EventCosts costs = costs_for(in, in.p);

    std::vector<double> psi = costs.psi;
    if (options.inject_bug) psi.back() = psi[psi.size() - 2];
    const std::vector<double> gx = ray_loss_grad_x(in.x, psi);
    for (std::size_t k = 0; k < in.x.size(); ++k) {
      std::vector<double> xp = in.x;
      std::vector<double> xm = in.x;
      xp[k] += options.step;
      xm[k] -= options.step;
      const double numeric = (ray_loss(xp, costs.psi) - ray_loss(xm, costs.psi)) / (2.0 * options.step);
      record(gx[k], numeric);
    }

    if (in.channels == 0) continue;
    const std::vector<double> gp = ray_loss_grad_p(in.x, costs);
    for (std::size_t k = 0; k < in.p.size(); ++k) {
      std::vector<double> pp = in.p;
      std::vector<double> pm = in.p;
      pp[k] += options.step;
      pm[k] -= options.step;
      auto psi_of = [&](std::span<const double> q) {
        return kind == ObservationKind::semantics ? semantic_psi(in, q) : costs_for(in, q).psi;
      };
      const double numeric = (ray_loss(in.x, psi_of(pp)) - ray_loss(in.x, psi_of(pm))) / (2.0 * options.step);
      record(gp[k], numeric);
    }
  }
  return result;
}

}  // namespace drc
