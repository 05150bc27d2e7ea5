#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

namespace spfti::io {

/// Shortest decimal text that parses back to exactly `v`; "inf"/"-inf"/"nan"
/// for non-finite values.
std::string format_double(double v);

/// Parses text written by format_double (also accepts inf/nan). Throws
/// FormatError on trailing garbage.
double parse_double(const std::string& text);

/// Binary 8-bit PGM (P5), linearly scaled so the maximum maps to 255.
/// `values` is row-major with `width` entries per row.
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const double> values);

void write_f64_le(std::ostream& os, double v);
void write_u32_le(std::ostream& os, std::uint32_t v);

/// Opens a file for writing, creating parent directories. Throws IoError.
std::ofstream open_output(const std::filesystem::path& path, bool binary = false);
std::ifstream open_input(const std::filesystem::path& path, bool binary = false);

}  // namespace spfti::io
