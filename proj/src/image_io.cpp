#include "drc/image_io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "drc/error.hpp"

namespace drc {
namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  return out;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const std::filesystem::path& path) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (tok.empty()) throw FormatError(path.string() + ": truncated image header");
  return tok;
}

int header_int(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = header_token(in, path);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": bad header value '" + tok + "'");
  }
}

void read_exact(std::istream& in, char* dst, std::size_t n, const std::filesystem::path& path) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw FormatError(path.string() + ": truncated pixel data");
}

void check_size(int w, int h, const std::filesystem::path& path) {
  if (w < 1 || h < 1) throw FormatError(path.string() + ": image dimensions must be positive");
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.maxval < 1 || image.maxval > 255) throw std::invalid_argument("PGM maxval must be in [1,255]");
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw std::invalid_argument("PGM pixel count mismatch");
  }
  for (auto p : image.pixels) {
    if (p > image.maxval) throw std::invalid_argument("PGM sample exceeds maxval");
  }
  auto out = open_out(path);
  out << "P5\n" << image.width << ' ' << image.height << '\n' << image.maxval << '\n';
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

GrayImage read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (header_token(in, path) != "P5") throw FormatError(path.string() + ": not a binary PGM (P5)");
  GrayImage img;
  img.width = header_int(in, path);
  img.height = header_int(in, path);
  img.maxval = header_int(in, path);
  check_size(img.width, img.height, path);
  if (img.maxval < 1 || img.maxval > 255) throw FormatError(path.string() + ": unsupported PGM maxval");
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  read_exact(in, reinterpret_cast<char*>(img.pixels.data()), img.pixels.size(), path);
  for (auto p : img.pixels) {
    if (p > img.maxval) throw FormatError(path.string() + ": sample exceeds maxval");
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  if (image.pixels.size() != 3 * static_cast<std::size_t>(image.width) * image.height) {
    throw std::invalid_argument("PPM pixel count mismatch");
  }
  auto out = open_out(path);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

RgbImage read_ppm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (header_token(in, path) != "P6") throw FormatError(path.string() + ": not a binary PPM (P6)");
  RgbImage img;
  img.width = header_int(in, path);
  img.height = header_int(in, path);
  check_size(img.width, img.height, path);
  if (header_int(in, path) != 255) throw FormatError(path.string() + ": only maxval 255 PPM is supported");
  img.pixels.resize(3 * static_cast<std::size_t>(img.width) * img.height);
  read_exact(in, reinterpret_cast<char*>(img.pixels.data()), img.pixels.size(), path);
  return img;
}

void write_pfm(const std::filesystem::path& path, const FloatImage& image) {
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw std::invalid_argument("PFM pixel count mismatch");
  }
  auto out = open_out(path);
  out << "Pf\n" << image.width << ' ' << image.height << "\n-1.0\n";
  std::string row(4 * static_cast<std::size_t>(image.width), '\0');
  for (int y = image.height - 1; y >= 0; --y) {
    for (int x = 0; x < image.width; ++x) {
      const auto bits = std::bit_cast<std::uint32_t>(image.pixels[static_cast<std::size_t>(y) * image.width + x]);
      for (int b = 0; b < 4; ++b) row[4 * x + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

FloatImage read_pfm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (header_token(in, path) != "Pf") throw FormatError(path.string() + ": not a single-channel PFM (Pf)");
  FloatImage img;
  img.width = header_int(in, path);
  img.height = header_int(in, path);
  check_size(img.width, img.height, path);
  const std::string scale_tok = header_token(in, path);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": bad PFM scale");
  }
  if (scale == 0.0) throw FormatError(path.string() + ": PFM scale must be nonzero");
  const bool little = scale < 0.0;
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  std::string row(4 * static_cast<std::size_t>(img.width), '\0');
  for (int y = img.height - 1; y >= 0; --y) {
    read_exact(in, row.data(), row.size(), path);
    for (int x = 0; x < img.width; ++x) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        const auto byte = static_cast<std::uint32_t>(static_cast<unsigned char>(row[4 * x + b]));
        bits |= little ? byte << (8 * b) : byte << (8 * (3 - b));
      }
      img.pixels[static_cast<std::size_t>(y) * img.width + x] = std::bit_cast<float>(bits);
    }
  }
  return img;
}

}  // namespace drc
