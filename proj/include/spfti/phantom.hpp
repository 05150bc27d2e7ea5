#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spfti/dims.hpp"

namespace spfti {

enum class SpectrumKind { Narrow, Medium, Broad };

SpectrumKind parse_spectrum_kind(const std::string& name);
std::string to_string(SpectrumKind kind);

struct Spectrum {
  RVector values;
  std::size_t peak_index = 1;  ///< 1-based
  double peak_value = 0.0;
};

/// Asymmetric raised-cosine line: cos^2 falloff over a left and a right
/// half-width, zero beyond. Half-widths are set per kind on a 256-sample
/// axis (narrow 16/8, medium 20/12, broad 27/20), scaled with n_nu and then
/// by `width_scale`.
Spectrum make_spectrum(SpectrumKind kind, std::size_t n_nu, std::size_t peak_index,
                       double peak_value, double width_scale = 1.0);

/// Nonnegative n_p_bar x n_p_bar weights, row y, column x.
struct SpatialMap {
  std::size_t n_p_bar = 0;
  RVector weights;
};

struct BlobParams {
  std::size_t count = 3;
  double radius_min = 0.15;  ///< Gaussian std. dev., fraction of the field width
  double radius_max = 0.3;
  double amp_min = 0.5;
  double amp_max = 1.0;
};

/// Sum of `count` isotropic Gaussian blobs with seeded centers, widths and
/// amplitudes.
SpatialMap gaussian_blob_map(std::size_t n_p_bar, const BlobParams& params, std::uint64_t seed);

/// X(l_nu, pixel) = sum_i maps[i](pixel) spectra[i](l_nu).
HSVolume assemble_volume(const std::vector<SpatialMap>& maps, const std::vector<Spectrum>& spectra,
                         const Dims& dims);

struct PhantomParams {
  BlobParams blobs;
  /// Peak locations as fractions of the axis (72, 80 and 97 of 256).
  double peak_fraction[3] = {72.0 / 256.0, 80.0 / 256.0, 97.0 / 256.0};
  double peak_value = 100.0;
  /// Line widths relative to the 256-sample reference shapes. At small n_nu
  /// the reference widths cover only a few samples, so the default widens them.
  double width_scale = 2.0;
};

/// Three blob maps mixed with narrow, medium and broad spectra.
HSVolume default_phantom(const Dims& dims, std::uint64_t seed, const PhantomParams& params = {});

/// Volume file: "SPFTIVOL" magic, u32 version, u32 n_xi, u32 n_p_bar,
/// u32 layout (0 = wavenumber fastest, pixel index l_p slowest), then n_hs
/// little-endian float64 values.
void save_volume(const HSVolume& x, const std::filesystem::path& path);
HSVolume load_volume(const std::filesystem::path& path);

}  // namespace spfti
