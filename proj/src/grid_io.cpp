#include "drc/grid_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "drc/error.hpp"

namespace drc {
namespace {

constexpr const char* kMagic = "DRC-GRID";
constexpr const char* kVersion = "v1";

void append_f64_le(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double read_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::string geometry_tokens(const GridGeometry& g) {
  std::ostringstream os;
  const Dims& d = g.dims();
  os << d.nx << ' ' << d.ny << ' ' << d.nz;
  if (g.kind() == GeometryKind::uniform) {
    const Aabb& b = g.box();
    for (int a = 0; a < 3; ++a) os << ' ' << format_double(b.min[a]);
    for (int a = 0; a < 3; ++a) os << ' ' << format_double(b.max[a]);
  } else {
    const FrustumParams& p = g.frustum_params();
    os << ' ' << format_double(p.alpha1) << ' ' << format_double(p.alpha2) << ' ' << format_double(p.f);
  }
  return os.str();
}

const char* geometry_name(const GridGeometry& g) {
  return g.kind() == GeometryKind::uniform ? "uniform" : "frustum";
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

struct RawFile {
  std::vector<std::string> header;
  std::string payload;
};

RawFile read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header line");
  RawFile raw;
  std::istringstream hs(line);
  for (std::string tok; hs >> tok;) raw.header.push_back(tok);
  if (raw.header.size() < 2 || raw.header[0] != kMagic || raw.header[1] != kVersion) {
    throw FormatError(path.string() + ": not a DRC-GRID v1 file");
  }
  raw.payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return raw;
}

int parse_int(const std::string& tok) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) throw FormatError("expected integer, got '" + tok + "'");
  return v;
}

// Parses "<kind> nx ny nz params..." starting at header[2]; returns the geometry
// and advances `pos` past the consumed tokens.
GridGeometry parse_geometry(const std::string& kind, const std::vector<std::string>& h, std::size_t& pos) {
  auto need = [&](std::size_t n) {
    if (pos + n > h.size()) throw FormatError("truncated DRC-GRID header");
  };
  need(3);
  Dims d{parse_int(h[pos]), parse_int(h[pos + 1]), parse_int(h[pos + 2])};
  pos += 3;
  try {
    if (kind == "uniform") {
      need(6);
      Aabb b;
      for (int a = 0; a < 3; ++a) b.min[a] = parse_double(h[pos + a]);
      for (int a = 0; a < 3; ++a) b.max[a] = parse_double(h[pos + 3 + a]);
      pos += 6;
      return GridGeometry::uniform(d, b);
    }
    if (kind == "frustum") {
      need(3);
      FrustumParams p{parse_double(h[pos]), parse_double(h[pos + 1]), parse_double(h[pos + 2])};
      pos += 3;
      return GridGeometry::frustum(d, p);
    }
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid geometry in DRC-GRID header: ") + e.what());
  }
  throw FormatError("unknown grid kind '" + kind + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw FormatError("expected number, got '" + token + "'");
  }
  return v;
}

void write_grid(const std::filesystem::path& path, const OccupancyGrid& grid, const AuxGrid* aux,
                const std::vector<std::string>& notes) {
  if (aux && !(aux->geometry() == grid.geometry())) throw std::invalid_argument("aux grid geometry mismatch");
  std::string bytes = std::string(kMagic) + ' ' + kVersion + ' ' + geometry_name(grid.geometry()) + ' ' +
                      geometry_tokens(grid.geometry()) + ' ';
  if (!aux) {
    bytes += "none";
  } else if (aux->kind() == AuxKind::color) {
    bytes += "color";
  } else {
    bytes += "sem:" + std::to_string(aux->channels());
  }
  for (const auto& n : notes) {
    if (n.find_first_of(" \t\n") != std::string::npos) throw std::invalid_argument("grid note must not contain whitespace");
    bytes += ' ' + n;
  }
  bytes += '\n';
  bytes.reserve(bytes.size() + 8 * (grid.size() + (aux ? aux->payload().size() : 0)));
  for (double v : grid.values()) append_f64_le(bytes, v);
  if (aux) {
    for (double v : aux->payload()) append_f64_le(bytes, v);
  }
  write_file(path, bytes);
}

GridFile read_grid(const std::filesystem::path& path) {
  RawFile raw = read_raw(path);
  const auto& h = raw.header;
  if (h.size() < 3) throw FormatError(path.string() + ": truncated header");
  if (h[2].rfind("bin:", 0) == 0) throw FormatError(path.string() + ": binary grid where occupancy grid expected");
  std::size_t pos = 3;
  GridGeometry geom = parse_geometry(h[2], h, pos);
  if (pos >= h.size()) throw FormatError(path.string() + ": missing aux kind");
  const std::string aux_tok = h[pos++];
  int channels = 0;
  std::optional<AuxKind> aux_kind;
  if (aux_tok == "color") {
    aux_kind = AuxKind::color;
    channels = 3;
  } else if (aux_tok.rfind("sem:", 0) == 0) {
    aux_kind = AuxKind::semantics;
    channels = parse_int(aux_tok.substr(4));
    if (channels < 1) throw FormatError("semantic class count must be >= 1");
  } else if (aux_tok != "none") {
    throw FormatError("unknown aux kind '" + aux_tok + "'");
  }
  const std::size_t n = geom.cell_count();
  const std::size_t expected = 8 * (n + n * static_cast<std::size_t>(channels));
  if (raw.payload.size() != expected) {
    throw FormatError(path.string() + ": payload has " + std::to_string(raw.payload.size()) + " bytes, expected " +
                      std::to_string(expected));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(raw.payload.data());
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = read_f64_le(p + 8 * i);
  try {
    GridFile out{OccupancyGrid(geom, std::move(x)), std::nullopt, {}};
    if (aux_kind) {
      std::vector<double> payload(n * channels);
      for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = read_f64_le(p + 8 * (n + i));
      out.aux.emplace(geom, *aux_kind, channels, std::move(payload));
    }
    out.notes.assign(h.begin() + static_cast<std::ptrdiff_t>(pos), h.end());
    return out;
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_binary_grid(const std::filesystem::path& path, const BinaryGrid& grid) {
  std::string bytes = std::string(kMagic) + ' ' + kVersion + " bin:" + geometry_name(grid.geometry()) + ' ' +
                      geometry_tokens(grid.geometry()) + " none\n";
  for (auto v : grid.values()) bytes.push_back(static_cast<char>(v));
  write_file(path, bytes);
}

BinaryGrid read_binary_grid(const std::filesystem::path& path) {
  RawFile raw = read_raw(path);
  const auto& h = raw.header;
  if (h.size() < 3 || h[2].rfind("bin:", 0) != 0) throw FormatError(path.string() + ": not a binary grid");
  std::size_t pos = 3;
  GridGeometry geom = parse_geometry(h[2].substr(4), h, pos);
  if (pos >= h.size() || h[pos] != "none") throw FormatError(path.string() + ": binary grid must have aux 'none'");
  if (raw.payload.size() != geom.cell_count()) throw FormatError(path.string() + ": payload size mismatch");
  std::vector<std::uint8_t> occ(raw.payload.size());
  for (std::size_t i = 0; i < occ.size(); ++i) {
    const auto b = static_cast<std::uint8_t>(raw.payload[i]);
    if (b > 1) throw FormatError(path.string() + ": binary cell value must be 0 or 1");
    occ[i] = b;
  }
  return BinaryGrid(geom, std::move(occ));
}

}  // namespace drc
