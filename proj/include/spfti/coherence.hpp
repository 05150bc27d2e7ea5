#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>

#include "spfti/dims.hpp"

namespace spfti {

/// Bound on the DFT/Haar local coherence, sqrt(2) min{1, |l_xi - n_xi/2|^{-1/2}}.
/// At l_xi = n_xi/2 the inverse power is infinite and the cap gives sqrt(2).
double kappa_xi(std::size_t l_xi, std::size_t n_xi);

/// Hadamard/2D-Haar local coherence min{1, 2^{-floor(log2(max{l_x,l_y} - 1))}}.
/// max{l_x,l_y} = 1 takes the log of zero; the power is treated as +inf so the
/// value is 1.
double kappa_p(std::size_t l_x, std::size_t l_y, std::size_t n_p_bar);

enum class KappaVariant {
  Eq8,      ///< sqrt(2) min{1, a(l_x,l_y) |l_xi - n_xi/2|^{-1/2}}, single cap
  Product,  ///< kappa_xi * kappa_p, each factor capped separately
};

double kappa_full(const Index3D& idx, const Dims& dims, KappaVariant variant);

/// Local coherence bounds (or exact values) in flat-label order.
struct CoherenceProfile {
  enum class Source { Eq8, Product, Brute };

  Dims dims;
  RVector kappa;
  double kappa_sq_norm = 0.0;
  Source source = Source::Eq8;
};

CoherenceProfile closed_form_profile(const Dims& dims, KappaVariant variant);

inline constexpr std::size_t kDefaultBruteForceCap = std::size_t{1} << 14;

/// Exact mu_l = max_j |(Phi_sp^* Psi_sp)_{l,j}|, computed column by column.
/// Throws SizeError when n_hs exceeds `cap`.
CoherenceProfile brute_force_local_coherence(const Dims& dims,
                                             std::size_t cap = kDefaultBruteForceCap);

/// Row-wise max |.| of Phi_dft^* Psi_dhw, indexed by l_xi - 1.
RVector dft_dhw_coherence(std::size_t n_xi);
/// Row-wise max |.| of Phi_had^* Psi_idhw, indexed by l_p - 1.
RVector had_idhw_coherence(std::size_t n_p_bar);

enum class PmfVariant {
  KappaSq,  ///< p(l) = kappa_l^2 / |kappa|^2
  Eq9,      ///< p(l) proportional to min{1, |l_xi - n_xi/2|^{-1} max{l_x,l_y}^{-1}}
  Uniform,  ///< p(l) = 1 / n_hs
};

/// Probability mass over flat labels. `kappa` selects the bound used by
/// KappaSq and is ignored by the other variants.
RVector build_pmf(const Dims& dims, PmfVariant variant, KappaVariant kappa = KappaVariant::Eq8);

/// Sampling multiset drawn i.i.d. from a pmf, with the VDS weights.
struct SamplingPlan {
  RVector pmf;
  std::vector<std::size_t> omega;  ///< 1-based flat labels, duplicates kept
  RVector weights;                 ///< 1 / sqrt(pmf(omega_j))
  std::uint64_t seed = 0;
  std::size_t m = 0;
};

/// Draws m labels with replacement by inverse-CDF on Philox(seed) uniforms.
/// Throws ValidationError for negative entries or |sum - 1| > 1e-9.
SamplingPlan sample_omega(std::span<const double> pmf, std::size_t m, std::uint64_t seed);

/// A plan that visits every label exactly once (the Nyquist scheme), with
/// weights taken from `pmf`.
SamplingPlan full_plan(std::span<const double> pmf);

/// ceil(c |kappa|^2 k log(1/eps_fail)); the constant c is not known in closed
/// form and defaults to 1. Advisory only.
std::size_t sample_complexity(std::size_t k, double eps_fail, const Dims& dims,
                              KappaVariant variant = KappaVariant::Eq8, double c = 1.0);

/// CSV with header `flat,l_xi,l_x,l_y,value`.
void write_profile_csv(std::ostream& os, const Dims& dims, std::span<const double> values);
/// One PGM per OPD slice (x across, y down), named <stem>_xi<l_xi>.pgm.
void write_profile_pgm(const std::filesystem::path& dir, const std::string& stem,
                       const Dims& dims, std::span<const double> values);

/// n_p_bar x n_p_bar grid (row y, column x) of the values at OPD index l_xi.
RVector profile_slice(const Dims& dims, std::span<const double> values, std::size_t l_xi);

}  // namespace spfti
