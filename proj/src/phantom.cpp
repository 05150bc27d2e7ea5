#include "spfti/phantom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>

#include "spfti/errors.hpp"
#include "spfti/io.hpp"
#include "spfti/rng.hpp"

namespace spfti {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'F', 'T', 'I', 'V', 'O', 'L'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kLayoutWavenumberFastest = 0;

struct Widths {
  double left;
  double right;
};

Widths widths_for(SpectrumKind kind) {
  switch (kind) {
    case SpectrumKind::Narrow: return {16.0, 8.0};
    case SpectrumKind::Medium: return {20.0, 12.0};
    case SpectrumKind::Broad: return {27.0, 20.0};
  }
  throw ValidationError("unknown spectrum kind");
}

}  // namespace

SpectrumKind parse_spectrum_kind(const std::string& name) {
  if (name == "narrow") return SpectrumKind::Narrow;
  if (name == "medium") return SpectrumKind::Medium;
  if (name == "broad") return SpectrumKind::Broad;
  throw ValidationError("unknown spectrum kind '" + name + "' (narrow|medium|broad)");
}

std::string to_string(SpectrumKind kind) {
  switch (kind) {
    case SpectrumKind::Narrow: return "narrow";
    case SpectrumKind::Medium: return "medium";
    case SpectrumKind::Broad: return "broad";
  }
  return "?";
}

Spectrum make_spectrum(SpectrumKind kind, std::size_t n_nu, std::size_t peak_index,
                       double peak_value, double width_scale) {
  if (n_nu == 0) throw DimensionError("make_spectrum: empty axis");
  if (peak_index < 1 || peak_index > n_nu) {
    throw RangeError("make_spectrum: peak index " + std::to_string(peak_index) + " outside [1, " +
                     std::to_string(n_nu) + "]");
  }
  if (!(peak_value >= 0.0) || !std::isfinite(peak_value)) {
    throw ValidationError("make_spectrum: peak value must be finite and >= 0");
  }
  if (!(width_scale > 0.0) || !std::isfinite(width_scale)) {
    throw ValidationError("make_spectrum: width scale must be positive");
  }
  const double scale = width_scale * static_cast<double>(n_nu) / 256.0;
  const Widths w = widths_for(kind);
  const double left = std::max(1.0, w.left * scale);
  const double right = std::max(1.0, w.right * scale);
  Spectrum sp{RVector(n_nu, 0.0), peak_index, peak_value};
  for (std::size_t l = 1; l <= n_nu; ++l) {
    const double d = static_cast<double>(l) - static_cast<double>(peak_index);
    const double half = d < 0 ? left : right;
    const double t = std::abs(d) / half;
    if (t < 1.0) {
      const double c = std::cos(0.5 * std::numbers::pi * t);
      sp.values[l - 1] = peak_value * c * c;
    }
  }
  return sp;
}

SpatialMap gaussian_blob_map(std::size_t n_p_bar, const BlobParams& params, std::uint64_t seed) {
  if (n_p_bar == 0) throw DimensionError("gaussian_blob_map: empty grid");
  if (!(params.radius_min > 0.0 && params.radius_min <= params.radius_max)) {
    throw ValidationError("gaussian_blob_map: need 0 < radius_min <= radius_max");
  }
  if (!(params.amp_min >= 0.0 && params.amp_min <= params.amp_max)) {
    throw ValidationError("gaussian_blob_map: need 0 <= amp_min <= amp_max");
  }
  Philox rng(seed);
  SpatialMap map{n_p_bar, RVector(n_p_bar * n_p_bar, 0.0)};
  const auto side = static_cast<double>(n_p_bar);
  for (std::size_t b = 0; b < params.count; ++b) {
    const double cx = side * rng.uniform();
    const double cy = side * rng.uniform();
    const double r = side * (params.radius_min + (params.radius_max - params.radius_min) * rng.uniform());
    const double amp = params.amp_min + (params.amp_max - params.amp_min) * rng.uniform();
    for (std::size_t y = 0; y < n_p_bar; ++y) {
      for (std::size_t x = 0; x < n_p_bar; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - cx;
        const double dy = static_cast<double>(y) + 0.5 - cy;
        map.weights[y * n_p_bar + x] += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * r * r));
      }
    }
  }
  return map;
}

HSVolume assemble_volume(const std::vector<SpatialMap>& maps, const std::vector<Spectrum>& spectra,
                         const Dims& dims) {
  if (maps.size() != spectra.size()) {
    throw DimensionError("assemble_volume: " + std::to_string(maps.size()) + " maps but " +
                         std::to_string(spectra.size()) + " spectra");
  }
  HSVolume x = HSVolume::zeros(dims);
  const std::size_t nx = dims.n_xi();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (maps[i].n_p_bar != dims.n_p_bar() || maps[i].weights.size() != dims.n_p()) {
      throw DimensionError("assemble_volume: map " + std::to_string(i) + " does not match dims");
    }
    if (spectra[i].values.size() != nx) {
      throw DimensionError("assemble_volume: spectrum " + std::to_string(i) + " has length " +
                           std::to_string(spectra[i].values.size()) + ", expected " +
                           std::to_string(nx));
    }
    for (std::size_t q = 0; q < dims.n_p(); ++q) {
      const double w = maps[i].weights[q];
      if (!std::isfinite(w) || w < 0.0) throw ValidationError("assemble_volume: negative or non-finite weight");
      for (std::size_t l = 0; l < nx; ++l) x.data()[q * nx + l] += w * spectra[i].values[l];
    }
  }
  return x;
}

HSVolume default_phantom(const Dims& dims, std::uint64_t seed, const PhantomParams& params) {
  const SpectrumKind kinds[3] = {SpectrumKind::Narrow, SpectrumKind::Medium, SpectrumKind::Broad};
  std::vector<SpatialMap> maps;
  std::vector<Spectrum> spectra;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto peak = static_cast<std::size_t>(
        std::clamp(std::lround(params.peak_fraction[i] * static_cast<double>(dims.n_xi())), 1L,
                   static_cast<long>(dims.n_xi())));
    spectra.push_back(make_spectrum(kinds[i], dims.n_xi(), peak, params.peak_value, params.width_scale));
    maps.push_back(gaussian_blob_map(dims.n_p_bar(), params.blobs, derive_seed(seed, 0xB10B, i)));
  }
  return assemble_volume(maps, spectra, dims);
}

void save_volume(const HSVolume& x, const std::filesystem::path& path) {
  auto os = io::open_output(path, true);
  os.write(kMagic, sizeof kMagic);
  io::write_u32_le(os, kVersion);
  io::write_u32_le(os, static_cast<std::uint32_t>(x.dims().n_xi()));
  io::write_u32_le(os, static_cast<std::uint32_t>(x.dims().n_p_bar()));
  io::write_u32_le(os, kLayoutWavenumberFastest);
  for (double v : x.data()) io::write_f64_le(os, v);
  if (!os) throw IoError(path.string() + ": write failed");
}

HSVolume load_volume(const std::filesystem::path& path) {
  auto is = io::open_input(path, true);
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) {
    throw FormatError(path.string() + ": " + what + " at byte " + std::to_string(pos));
  };
  char magic[8];
  if (!is.read(magic, 8)) fail("truncated header");
  if (!std::equal(magic, magic + 8, kMagic)) fail("bad magic");
  pos += 8;
  auto read_u32 = [&]() {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) fail("truncated header");
    pos += 4;
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  };
  const std::uint32_t version = read_u32();
  if (version != kVersion) {
    pos -= 4;
    fail("unsupported version " + std::to_string(version));
  }
  const std::uint32_t n_xi = read_u32();
  const std::uint32_t n_p_bar = read_u32();
  std::optional<Dims> dims;
  try {
    dims.emplace(n_xi, n_p_bar);
  } catch (const DimensionError& e) {
    pos -= 8;
    fail(std::string("invalid dims: ") + e.what());
  }
  const std::uint32_t layout = read_u32();
  if (layout != kLayoutWavenumberFastest) {
    pos -= 4;
    fail("unknown index layout " + std::to_string(layout));
  }
  RVector data(dims->n_hs());
  unsigned char b[8];
  for (double& v : data) {
    if (!is.read(reinterpret_cast<char*>(b), 8)) {
      fail("payload truncated (expected " + std::to_string(dims->n_hs()) + " values)");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
    pos += 8;
  }
  if (is.peek() != std::char_traits<char>::eof()) fail("trailing bytes after payload");
  try {
    return HSVolume(*dims, std::move(data));
  } catch (const ValidationError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace spfti
