#include "spfti/acquisition.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "spfti/errors.hpp"
#include "spfti/io.hpp"
#include "spfti/rng.hpp"
#include "spfti/transforms.hpp"

namespace spfti {

namespace {

CVector sense_storage(const HSVolume& x) {
  return sensing_map(x.dims()).apply_adjoint(x.to_complex());
}

cplx noise_sample(Philox& rng, double sigma) {
  const double re = rng.normal();
  const double im = rng.normal();
  return {sigma * re, sigma * im};
}

void check_sigma(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be finite and >= 0");
}

}  // namespace

CVector sense_all(const HSVolume& x) {
  const Dims& dims = x.dims();
  const CVector full = sense_storage(x);
  CVector out(dims.n_hs());
  for (std::size_t l = 1; l <= dims.n_hs(); ++l) out[l - 1] = full[storage_offset_of_flat(l, dims)];
  return out;
}

MeasurementSet nyquist_acquire(const HSVolume& x, double sigma, std::uint64_t seed) {
  check_sigma(sigma);
  MeasurementSet ms{x.dims(), sense_all(x), {}, sigma, seed, 0};
  ms.omega.resize(x.dims().n_hs());
  Philox rng(seed);
  for (std::size_t l = 1; l <= x.dims().n_hs(); ++l) {
    ms.omega[l - 1] = l;
    if (sigma > 0.0) ms.y[l - 1] += noise_sample(rng, sigma);
  }
  return ms;
}

MeasurementSet compressive_acquire(const HSVolume& x, const SamplingPlan& plan, double sigma,
                                   std::uint64_t seed) {
  check_sigma(sigma);
  const Dims& dims = x.dims();
  if (plan.pmf.size() != dims.n_hs()) {
    throw DimensionError("compressive_acquire: plan covers " + std::to_string(plan.pmf.size()) +
                         " labels, volume has " + std::to_string(dims.n_hs()));
  }
  const CVector full = sense_storage(x);
  MeasurementSet ms{dims, CVector(plan.omega.size()), plan.omega, sigma, seed, plan.seed};
  Philox rng(seed);
  for (std::size_t j = 0; j < plan.omega.size(); ++j) {
    ms.y[j] = full[storage_offset_of_flat(plan.omega[j], dims)];
    if (sigma > 0.0) ms.y[j] += noise_sample(rng, sigma);
  }
  return ms;
}

std::vector<std::uint8_t> binary_pattern(std::size_t l_p, std::size_t n_p_bar) {
  if (n_p_bar < 1 || !is_power_of_two(n_p_bar)) {
    throw DimensionError("binary_pattern: n_p_bar must be a power of two");
  }
  const std::size_t n_p = n_p_bar * n_p_bar;
  if (l_p < 1 || l_p > n_p) {
    throw RangeError("binary_pattern: l_p=" + std::to_string(l_p) + " outside [1, " +
                     std::to_string(n_p) + "]");
  }
  CVector e(n_p);
  e[l_p - 1] = 1.0;
  const CVector column = fwht_paley(e, false);
  const double scale = std::sqrt(static_cast<double>(n_p));
  std::vector<std::uint8_t> mask(n_p);
  for (std::size_t q = 0; q < n_p; ++q) {
    mask[q] = static_cast<std::uint8_t>(std::lround((scale * column[q].real() + 1.0) / 2.0));
  }
  return mask;
}

BinaryMeasurements binary_acquire(const HSVolume& x, const SamplingPlan& plan) {
  const Dims& dims = x.dims();
  if (plan.pmf.size() != dims.n_hs()) throw DimensionError("binary_acquire: plan/volume mismatch");
  const std::size_t nx = dims.n_xi();
  const std::size_t np = dims.n_p();

  // Per-pixel spectra after the OPD transform: z[q * nx + r] = (Phi_dft^* x_q)_r.
  CVector z(dims.n_hs());
  for (std::size_t q = 0; q < np; ++q) {
    const auto first = x.data().begin() + static_cast<std::ptrdiff_t>(q * nx);
    const CVector column(first, first + static_cast<std::ptrdiff_t>(nx));
    const CVector f = dft_apply(column, false);
    std::copy(f.begin(), f.end(), z.begin() + static_cast<std::ptrdiff_t>(q * nx));
  }

  BinaryMeasurements bm{dims, plan.omega, CVector(plan.omega.size()),
                        std::vector<std::optional<cplx>>(nx)};
  std::vector<std::vector<std::uint8_t>> masks(np + 1);
  for (std::size_t j = 0; j < plan.omega.size(); ++j) {
    const Index3D idx = unflatten(plan.omega[j], dims);
    const std::size_t lp = pattern_index(idx.l_x, idx.l_y, dims);
    if (masks[lp].empty()) masks[lp] = binary_pattern(lp, dims.n_p_bar());
    cplx acc{};
    for (std::size_t q = 0; q < np; ++q) {
      if (masks[lp][q]) acc += z[q * nx + (idx.l_xi - 1)];
    }
    bm.y_bin[j] = acc;
    if (!bm.all_on[idx.l_xi - 1]) {
      cplx total{};
      for (std::size_t q = 0; q < np; ++q) total += z[q * nx + (idx.l_xi - 1)];
      bm.all_on[idx.l_xi - 1] = total;
    }
  }
  return bm;
}

CVector demix_binary(const BinaryMeasurements& bm) {
  if (bm.y_bin.size() != bm.omega.size()) throw DimensionError("demix_binary: length mismatch");
  if (bm.all_on.size() != bm.dims.n_xi()) throw DimensionError("demix_binary: reference table size");
  const double scale = 1.0 / std::sqrt(static_cast<double>(bm.dims.n_p()));
  CVector y(bm.y_bin.size());
  for (std::size_t j = 0; j < bm.omega.size(); ++j) {
    const Index3D idx = unflatten(bm.omega[j], bm.dims);
    const auto& ref = bm.all_on[idx.l_xi - 1];
    if (!ref) {
      throw ValidationError("demix_binary: no all-on reference for l_xi=" +
                            std::to_string(idx.l_xi));
    }
    y[j] = (2.0 * bm.y_bin[j] - *ref) * scale;
  }
  return y;
}

ExposureReport light_exposure_for_budget(double m, const Dims& dims) {
  const auto n_hs = static_cast<double>(dims.n_hs());
  if (!(m >= 0.0 && m <= n_hs)) throw ValidationError("light_exposure: m must lie in [0, n_hs]");
  const auto n_xi = static_cast<double>(dims.n_xi());
  const auto n_p = static_cast<double>(dims.n_p());
  ExposureReport r;
  r.compressive_units = (m + n_xi) * n_p;
  r.nyquist_units = (n_hs + n_xi) * n_p;
  r.ratio = (m + n_xi) / (n_hs + n_xi);
  return r;
}

ExposureReport light_exposure(std::size_t m, const Dims& dims) {
  if (m > dims.n_hs()) throw ValidationError("light_exposure: m exceeds n_hs");
  return light_exposure_for_budget(static_cast<double>(m), dims);
}

void write_complex_payload(const std::filesystem::path& path, std::span<const cplx> v) {
  auto os = io::open_output(path, true);
  for (const cplx& c : v) {
    io::write_f64_le(os, c.real());
    io::write_f64_le(os, c.imag());
  }
  if (!os) throw IoError(path.string() + ": write failed");
}

CVector read_complex_payload(const std::filesystem::path& path, std::size_t expected) {
  auto is = io::open_input(path, true);
  CVector out(expected);
  unsigned char b[8];
  auto read_f64 = [&](std::size_t offset) {
    if (!is.read(reinterpret_cast<char*>(b), 8)) {
      throw FormatError(path.string() + ": payload truncated at byte " + std::to_string(offset));
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
  };
  for (std::size_t j = 0; j < expected; ++j) {
    const double re = read_f64(16 * j);
    const double im = read_f64(16 * j + 8);
    out[j] = {re, im};
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path.string() + ": trailing bytes after " + std::to_string(16 * expected));
  }
  return out;
}

void save_measurements(const MeasurementSet& ms, const std::filesystem::path& stem,
                       const nlohmann::json& provenance) {
  if (ms.y.size() != ms.omega.size()) throw DimensionError("save_measurements: y/omega mismatch");
  write_complex_payload(std::filesystem::path(stem).concat(".bin"), ms.y);
  nlohmann::json j;
  j["format"] = "spfti-measurements";
  j["version"] = 1;
  j["n_xi"] = ms.dims.n_xi();
  j["n_p_bar"] = ms.dims.n_p_bar();
  j["m"] = ms.omega.size();
  j["omega"] = ms.omega;
  j["sigma"] = ms.sigma;
  j["noise_seed"] = ms.noise_seed;
  j["plan_seed"] = ms.plan_seed;
  j["payload"] = "little-endian float64, interleaved re/im";
  j["provenance"] = provenance;
  auto os = io::open_output(std::filesystem::path(stem).concat(".json"));
  os << j.dump(1) << '\n';
}

MeasurementSet load_measurements(const std::filesystem::path& stem, nlohmann::json* provenance) {
  const auto json_path = std::filesystem::path(stem).concat(".json");
  auto is = io::open_input(json_path);
  nlohmann::json j;
  try {
    is >> j;
    MeasurementSet ms{Dims(j.at("n_xi").get<std::size_t>(), j.at("n_p_bar").get<std::size_t>()),
                      {},
                      j.at("omega").get<std::vector<std::size_t>>(),
                      j.at("sigma").get<double>(),
                      j.at("noise_seed").get<std::uint64_t>(),
                      j.at("plan_seed").get<std::uint64_t>()};
    for (std::size_t l : ms.omega) {
      if (l < 1 || l > ms.dims.n_hs()) throw FormatError(json_path.string() + ": label out of range");
    }
    ms.y = read_complex_payload(std::filesystem::path(stem).concat(".bin"), ms.omega.size());
    if (provenance) *provenance = j.value("provenance", nlohmann::json::object());
    return ms;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(json_path.string() + ": " + e.what());
  }
}

}  // namespace spfti
