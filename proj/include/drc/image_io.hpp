#pragma once

// Netpbm-family image files. PGM (P5) and PPM (P6) use 8-bit samples; PFM is
// written little-endian (scale -1.0) with rows stored bottom-to-top as the
// format requires. In memory all images are row-major, top row first.

#include <cstdint>
#include <filesystem>
#include <vector>

namespace drc {

struct GrayImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint8_t> pixels;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB
};

struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;
};

void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);

/// Single-channel PFM ("Pf").
void write_pfm(const std::filesystem::path& path, const FloatImage& image);
FloatImage read_pfm(const std::filesystem::path& path);

}  // namespace drc
