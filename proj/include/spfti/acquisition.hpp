#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "spfti/coherence.hpp"
#include "spfti/dims.hpp"

namespace spfti {

/// Noisy SP-FTI measurements y_j of the labels omega_j.
///
/// Measurements are complex (the sensing basis contains the DFT); noise is
/// N(0, sigma^2) on the real and on the imaginary part independently.
struct MeasurementSet {
  Dims dims;
  CVector y;
  std::vector<std::size_t> omega;  ///< 1-based flat labels
  double sigma = 0.0;
  std::uint64_t noise_seed = 0;
  std::uint64_t plan_seed = 0;
};

/// y = Phi_sp^* x + n for every label once; y_j belongs to label j.
MeasurementSet nyquist_acquire(const HSVolume& x, double sigma, std::uint64_t seed);

/// y_j = (Phi_sp^* x)_{omega_j} + n_j. Repeated labels get independent noise.
MeasurementSet compressive_acquire(const HSVolume& x, const SamplingPlan& plan, double sigma,
                                   std::uint64_t seed);

/// The full noiseless sensing vector Phi_sp^* x in flat-label order.
CVector sense_all(const HSVolume& x);

/// 0/1 coded-aperture mask for pattern l_p (row y, column x), i.e. column l_p
/// of (sqrt(n_p) Phi_had + 1 1^T) / 2 on the spatial grid.
std::vector<std::uint8_t> binary_pattern(std::size_t l_p, std::size_t n_p_bar);

/// Raw detector values of a binary coded-aperture acquisition.
struct BinaryMeasurements {
  Dims dims;
  std::vector<std::size_t> omega;
  CVector y_bin;
  /// All-on (pattern 1) measurement per OPD sample, indexed l_xi - 1.
  std::vector<std::optional<cplx>> all_on;
};

/// Acquires the labels of `plan` through 0/1 masks, plus the all-on reference
/// at every OPD sample that appears in the plan.
BinaryMeasurements binary_acquire(const HSVolume& x, const SamplingPlan& plan);

/// Signed-Hadamard measurements (2 y_bin - y_all_on) / sqrt(n_p).
/// Throws ValidationError when a needed all-on reference is missing.
CVector demix_binary(const BinaryMeasurements& bm);

struct ExposureReport {
  double compressive_units = 0.0;  ///< (M + n_xi) n_p
  double nyquist_units = 0.0;      ///< (n_hs + n_xi) n_p
  double ratio = 0.0;
};

/// Light dose of an M-pattern acquisition relative to Nyquist. 0 <= m <= n_hs.
ExposureReport light_exposure(std::size_t m, const Dims& dims);
/// Same accounting for a fractional (expected) pattern budget.
ExposureReport light_exposure_for_budget(double m, const Dims& dims);

/// Writes <stem>.bin (little-endian f64 pairs re, im) and <stem>.json
/// (dims, omega, seeds, sigma and the caller's provenance object).
void save_measurements(const MeasurementSet& ms, const std::filesystem::path& stem,
                       const nlohmann::json& provenance = nlohmann::json::object());
/// Reads the pair written by save_measurements. The provenance object is
/// returned through `provenance` when given.
MeasurementSet load_measurements(const std::filesystem::path& stem,
                                 nlohmann::json* provenance = nullptr);

/// Shared binary payload helpers (interleaved re/im).
void write_complex_payload(const std::filesystem::path& path, std::span<const cplx> v);
CVector read_complex_payload(const std::filesystem::path& path, std::size_t expected);

}  // namespace spfti
