#include "spfti/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>

#include "spfti/errors.hpp"

namespace spfti::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(const std::string& text) {
  if (text == "inf" || text == "+inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  if (text == "nan") return NAN;
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw FormatError("not a number: '" + text + "'");
  }
  return v;
}

std::ofstream open_output(const std::filesystem::path& path, bool binary) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.string() + ": " + ec.message());
  }
  std::ofstream os(path, binary ? std::ios::binary | std::ios::out : std::ios::out);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  return os;
}

std::ifstream open_input(const std::filesystem::path& path, bool binary) {
  std::ifstream is(path, binary ? std::ios::binary | std::ios::in : std::ios::in);
  if (!is) throw IoError(path.string() + ": cannot open for reading");
  return is;
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const double> values) {
  if (values.size() != width * height) throw DimensionError("write_pgm: size mismatch");
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, std::abs(v));
  auto os = open_output(path, true);
  os << "P5\n" << width << ' ' << height << "\n255\n";
  for (double v : values) {
    const double scaled = peak > 0.0 ? 255.0 * std::abs(v) / peak : 0.0;
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(scaled))));
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
  os.write(b, 4);
}

void write_f64_le(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFFU);
  os.write(b, 8);
}

}  // namespace spfti::io
