#pragma once

// An observation bundle is a directory holding
//   kind.txt    one line: `<kind> escape=<meters> classes=<K>` (keys as relevant)
//   camera.txt  see camera.hpp
//   mask.pgm    (mask)       P5, maxval 1
//   depth.pfm   (depth, semantics)
//   labels.pgm  (semantics)  P5, maxval 255
//   color.ppm   (color)      P6, maxval 255
//
// Depth is stored as float32 and colors as 8-bit, so a round trip through
// files quantizes those channels.

#include <filesystem>
#include <vector>

#include "drc/renderer.hpp"

namespace drc {

void write_observation(const std::filesystem::path& dir, const Observation& observation);
Observation read_observation(const std::filesystem::path& dir);

/// Reads every bundle directly under `root` (sorted by name). A directory that
/// is itself a bundle is returned as a single observation.
std::vector<Observation> read_observation_set(const std::filesystem::path& root);

}  // namespace drc
