#pragma once

// Ray consistency loss between a probabilistic occupancy grid and per-ray
// observations.
//
// Along a ray crossing N cells with emptiness probabilities x_1..x_N, the ray
// terminates in cell i with probability (1 - x_i) * prod_{j<i} x_j and escapes
// the grid (event N+1) with probability prod_j x_j. Each event is assigned a
// cost psi(i) comparing what the event would predict with what the pixel
// observed; the ray loss is the expected cost.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "drc/camera.hpp"
#include "drc/grid.hpp"
#include "drc/traversal.hpp"

namespace drc {

using Rgb = std::array<double, 3>;

enum class ObservationKind { mask, depth, semantics, color };

const char* to_string(ObservationKind kind);
ObservationKind parse_observation_kind(const std::string& name);

struct CostParams {
  /// Depth assigned to the escape event for depth supervision (meters).
  double escape_depth = 10.0;
  /// Depth assigned to the escape event for depth+semantics supervision (meters).
  double semantic_escape_depth = 1000.0;
  /// Floor applied to class probabilities inside -log p.
  double probability_floor = 1e-8;
  /// Weight on the -log p term relative to the disparity term.
  double nll_weight = 1.0;
};

/// What a single pixel observed. Only the fields of `kind` are meaningful:
/// mask -> background (s = 1 means the ray misses the object, s = 0 means it
/// hits); depth -> depth; semantics -> depth, label; color -> color.
struct RayObservation {
  ObservationKind kind = ObservationKind::mask;
  double background = 0.0;
  double depth = 0.0;
  int label = 0;
  Rgb color{1.0, 1.0, 1.0};
  double weight = 1.0;

  static RayObservation mask(double s, double weight = 1.0);
  static RayObservation depth_of(double d, double weight = 1.0);
  static RayObservation semantics(double d, int label, double weight = 1.0);
  static RayObservation color_of(const Rgb& c, double weight = 1.0);
};

/// psi has N + 1 entries (last = escape). For aux-dependent costs,
/// dpsi_dp[i * channels + c] is the derivative of psi(i) w.r.t. channel c of
/// the i-th cell's payload, for the N cell events.
struct EventCosts {
  std::vector<double> psi;
  int channels = 0;
  std::vector<double> dpsi_dp;

  std::size_t events() const { return psi.size(); }
};

std::vector<double> event_probabilities(std::span<const double> x);

EventCosts cost_depth(std::span<const double> depths, double observed_depth, const CostParams& params = {});
EventCosts cost_depth(const RayTrace& trace, double observed_depth, const CostParams& params = {});

EventCosts cost_mask(std::size_t cells, double background);
EventCosts cost_mask(const RayTrace& trace, double background);

/// p holds N K-simplices, cell-major.
EventCosts cost_semantic(std::span<const double> depths, std::span<const double> p, int num_classes,
                         double observed_depth, int observed_class, const CostParams& params = {});

/// p holds N RGB triples, cell-major. The escape event predicts white.
EventCosts cost_color(std::span<const double> p, const Rgb& observed);

/// Expected event cost, evaluated in telescoped form
///   psi(1) + sum_i (psi(i+1) - psi(i)) prod_{j<=i} x_j.
double ray_loss(std::span<const double> x, std::span<const double> psi);

/// dL/dx_k = sum_{i>=k} (psi(i+1) - psi(i)) prod_{j<=i, j!=k} x_j, in O(N)
/// without division.
std::vector<double> ray_loss_grad_x(std::span<const double> x, std::span<const double> psi);

/// dL/dp_i = p(z = i) * dpsi_dp(i); same layout as costs.dpsi_dp.
std::vector<double> ray_loss_grad_p(std::span<const double> x, const EventCosts& costs);

/// |prod_i x_i - s|, the mask loss in closed form.
double mask_loss_closed_form(std::span<const double> x, double background);

struct RaySample {
  Ray ray;
  RayObservation observation;
};

struct ViewLossOptions {
  CostParams cost;
  /// Sequential evaluation in fixed ray order; otherwise rays are split across
  /// `threads` workers whose gradient buffers are summed in worker order.
  bool deterministic = true;
  int threads = 1;
};

struct ViewLoss {
  double loss = 0.0;
  std::size_t rays = 0;
  std::vector<double> grad_x;  // one per cell
  std::vector<double> grad_p;  // cells * channels, empty without aux grid
};

/// Weighted sum of ray losses over `rays`, with gradients scattered onto the grid.
ViewLoss view_loss(const OccupancyGrid& occupancy, const AuxGrid* aux, std::span<const RaySample> rays,
                   const ViewLossOptions& options = {});

/// Costs for one traced ray against its observation. Requires `aux` for
/// semantics and color.
EventCosts event_costs_for(const RayTrace& trace, const RayObservation& obs, const AuxGrid* aux,
                           const CostParams& params);

}  // namespace drc
