#pragma once

// Per-instance reconstruction: the grid itself is the parameter and is fitted
// to a set of observations by minimizing the summed ray consistency loss.
// Emptiness probabilities are held as logits (x = sigmoid(theta)); colors as
// per-channel logits; class distributions as per-cell softmax logits.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "drc/consistency.hpp"
#include "drc/grid.hpp"
#include "drc/renderer.hpp"

namespace drc {

struct AdamParams {
  double step_size = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected first and second moments.
class Adam {
 public:
  Adam(std::size_t size, AdamParams params);

  void step(std::span<double> params, std::span<const double> grad);
  int steps() const { return t_; }

 private:
  AdamParams params_;
  std::vector<double> m_;
  std::vector<double> v_;
  int t_ = 0;
};

struct FitConfig {
  int iterations = 500;
  /// Total rays per iteration, split evenly across the views used in it.
  int rays_per_iteration = 3000;
  /// 0 selects all views when there are at most 5, otherwise 3 per iteration.
  int views_per_iteration = 0;
  double foreground_weight = 5.0;
  std::uint64_t seed = 0;
  /// Use every pixel of every selected view instead of sampling rays.
  bool all_pixels = false;
  AdamParams adam;
  CostParams cost;
  bool deterministic = true;
  int threads = 1;
};

struct FitReport {
  std::vector<double> loss_trace;       // summed weighted loss, one per iteration
  std::vector<std::size_t> ray_counts;  // rays evaluated per iteration
  double wall_seconds = 0.0;
};

struct FitResult {
  OccupancyGrid occupancy;
  std::optional<AuxGrid> aux;
  FitReport report;
};

/// n pixels drawn uniformly with replacement; foreground pixels carry
/// `foreground_weight`, others weight 1. Deterministic in
/// (seed, iteration, view_index).
std::vector<RaySample> sample_rays(const Observation& observation, int n, double foreground_weight,
                                   std::uint64_t seed, int iteration, int view_index = 0);

/// Every pixel of the observation, weighted as in sample_rays.
std::vector<RaySample> all_pixel_rays(const Observation& observation, double foreground_weight);

FitResult fit(std::span<const Observation> observations, const GridGeometry& geometry, ObservationKind kind,
              const FitConfig& config);

double sigmoid(double v);

/// d/dtheta of a loss given d/dx and x = sigmoid(theta).
std::vector<double> chain_sigmoid(std::span<const double> grad, std::span<const double> values);

/// d/dlogits of a loss given d/dp and per-cell softmax outputs p (cell-major, K channels).
std::vector<double> chain_softmax(std::span<const double> grad, std::span<const double> probs, int channels);

/// Tab-separated loss log: iteration, loss, mean ray loss, kind.
void write_loss_log(const std::filesystem::path& path, const FitReport& report, ObservationKind kind);

}  // namespace drc
