#pragma once

// Numerical check of the analytic ray-loss gradients against central
// differences on random single-ray instances.

#include <cstdint>

#include "drc/consistency.hpp"

namespace drc {

struct GradCheckOptions {
  int trials = 200;
  std::uint64_t seed = 0;
  int max_cells = 12;
  double step = 1e-6;
  double relative_tolerance = 1e-5;
  /// Differences below this are accepted regardless of relative size.
  double absolute_floor = 1e-8;
  /// Test hook: drops the escape term from the analytic occupancy gradient,
  /// so the check must fail.
  bool inject_bug = false;
};

struct GradCheckResult {
  int trials = 0;
  long components = 0;
  /// |analytic - numeric| / max(|analytic|, |numeric|, absolute_floor / relative_tolerance)
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  long failures = 0;
  bool passed() const { return failures == 0; }
};

/// Checks dL/dx for every kind and, for semantics and color, dL/dp.
GradCheckResult check_gradients(ObservationKind kind, const GradCheckOptions& options = {});

}  // namespace drc
