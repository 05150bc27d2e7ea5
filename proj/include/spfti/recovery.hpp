#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "spfti/acquisition.hpp"
#include "spfti/coherence.hpp"
#include "spfti/dims.hpp"

namespace spfti {

struct SolverConfig {
  std::size_t max_iterations = 3000;
  double feasibility_tolerance = 1e-4;
  double objective_tolerance = 1e-5;
  int verbosity = 0;
  /// Restrict the sparsity coefficients to real values (the volume is real
  /// and both Kronecker sparsity factors are real).
  bool real_coefficients = false;
  bool record_trace = false;

  void validate() const;
};

struct TraceRow {
  std::size_t iteration = 0;
  double objective = 0.0;  ///< ||s||_1 of the current sparse iterate
  double residual = 0.0;   ///< ||D(y - P Phi^* Psi s)||
  double rho = 0.0;
};

struct RecoveryResult {
  Dims dims{2, 2};
  CVector x_hat;  ///< estimate in storage order
  CVector s_hat;  ///< Psi_sp^* x_hat
  double residual_norm = 0.0;
  double l1_norm = 0.0;
  double epsilon = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<TraceRow> trace;

  /// Real part of x_hat as a volume.
  HSVolume volume() const;
};

/// Empirical `percentile` of ||D n|| over `trials` fresh (Omega, n) draws.
/// Percentiles interpolate linearly between order statistics.
double calibrate_epsilon(double sigma, std::span<const double> pmf, std::size_t m, const Dims& dims,
                         std::size_t trials = 100, double percentile = 0.95,
                         std::uint64_t seed = 0);

/// Same percentile with Omega held fixed and only the noise redrawn.
double calibrate_epsilon_fixed(double sigma, const SamplingPlan& plan, std::size_t trials = 100,
                               double percentile = 0.95, std::uint64_t seed = 0);

/// ||D (y - P_Omega Phi_sp^* x)|| with d_jj = weights[j].
double weighted_residual(const MeasurementSet& ms, const SamplingPlan& plan, std::span<const cplx> x);

/// min ||Psi_sp^* u||_1 subject to ||D(y - P_Omega Phi_sp^* u)|| <= epsilon.
///
/// ADMM on the splitting z = Phi_sp^* Psi_sp s. The z-step is an exact
/// projection onto the weighted residual ellipsoid; the output is moved back
/// into the feasible set before it is returned.
RecoveryResult solve_bpdn(const MeasurementSet& ms, const SamplingPlan& plan, double epsilon,
                          const SolverConfig& cfg = {});

/// Minimum-norm least-squares estimate (P_Omega Phi_sp^*)^+ y by CGLS.
RecoveryResult solve_me(const MeasurementSet& ms, const SamplingPlan& plan,
                        const SolverConfig& cfg = {});

/// Relative error below which a reconstruction counts as exact (rounding only).
inline constexpr double kPerfectRelativeError = 1e-12;

/// 10 log10(||x||^2 / ||x - x_hat||^2); +inf when ||x - x_hat|| is at most
/// kPerfectRelativeError ||x||.
double rsnr(const HSVolume& x, const HSVolume& x_hat);
/// Noise level giving 10 log10(||x||^2 / (sigma^2 n_hs)) = snr_db; 0 for +inf.
double snr_to_sigma(const HSVolume& x, double snr_db);
/// ||u - H_K(u)||_1, H_K keeping the K largest moduli (ties: lowest index).
double sigma_k(std::span<const cplx> u, std::size_t k);

void save_result(const RecoveryResult& r, const std::filesystem::path& stem);
void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace);

}  // namespace spfti
