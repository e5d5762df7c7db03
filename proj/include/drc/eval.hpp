#pragma once

#include <span>
#include <utility>
#include <vector>

#include "drc/grid.hpp"

namespace drc {

struct IoUResult {
  double best_iou = 0.0;
  double best_threshold = 0.0;
  std::vector<std::pair<double, double>> curve;  // (threshold, iou)
};

/// IoU after binarizing: a cell is predicted occupied iff 1 - x >= threshold.
/// Returns 1 when both sets are empty.
double iou_at(const OccupancyGrid& pred, const BinaryGrid& gt, double threshold);

/// Sweeps thresholds 0.00, 0.01, ..., 1.00; ties go to the lower threshold.
IoUResult best_threshold(const OccupancyGrid& pred, const BinaryGrid& gt);

/// Exhaustive expectation over all 2^N occupancy configurations of the ray:
/// each cell is empty with probability x_j, and the cost is psi of the first
/// non-empty cell (psi.back() if every cell is empty). N is limited to 20.
double brute_force_ray_loss(std::span<const double> x, std::span<const double> psi);

}  // namespace drc
