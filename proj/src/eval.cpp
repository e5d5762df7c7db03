#include "drc/eval.hpp"

#include <cstdint>
#include <stdexcept>

namespace drc {

double iou_at(const OccupancyGrid& pred, const BinaryGrid& gt, double threshold) {
  if (!(pred.geometry() == gt.geometry())) throw std::invalid_argument("prediction and ground truth geometries differ");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must lie in [0,1]");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = 1.0 - pred[i] >= threshold;
    const bool g = gt.occupied(i);
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

IoUResult best_threshold(const OccupancyGrid& pred, const BinaryGrid& gt) {
  IoUResult r;
  r.best_iou = -1.0;
  for (int k = 0; k <= 100; ++k) {
    const double t = k / 100.0;
    const double iou = iou_at(pred, gt, t);
    r.curve.emplace_back(t, iou);
    if (iou > r.best_iou) {
      r.best_iou = iou;
      r.best_threshold = t;
    }
  }
  return r;
}

double brute_force_ray_loss(std::span<const double> x, std::span<const double> psi) {
  if (x.size() > 20) throw std::invalid_argument("brute force limited to 20 cells");
  if (psi.size() != x.size() + 1) throw std::invalid_argument("cost vector must have cells + 1 entries");
  const std::size_t n = x.size();
  double total = 0.0;
  for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
    // bit j set: cell j empty.
    double weight = 1.0;
    std::size_t first_occupied = n;
    for (std::size_t j = 0; j < n; ++j) {
      const bool is_empty = (bits >> j) & 1u;
      weight *= is_empty ? x[j] : 1.0 - x[j];
      if (!is_empty && first_occupied == n) first_occupied = j;
    }
    total += weight * psi[first_occupied];
  }
  return total;
}

}  // namespace drc
