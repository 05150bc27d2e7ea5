#pragma once

#include <span>

#include "spfti/dims.hpp"
#include "spfti/linear_map.hpp"

namespace spfti {

// Fast kernels. All lengths must be powers of two; other sizes raise
// DimensionError.

/// Centered unitary DFT.
///
/// The analysis direction (adjoint=false) computes Phi_dft^* u: row r (1-based)
/// holds frequency r - n/2, so the zero frequency sits at row n/2.
/// adjoint=true applies the synthesis Phi_dft.
CVector dft_apply(std::span<const cplx> u, bool adjoint);

/// Orthonormal Hadamard transform in Paley order, O(n log n).
///
/// H_n is symmetric and real, so both directions compute H_n u; the flag is
/// kept for interface symmetry with the other sensing kernels.
CVector fwht_paley(std::span<const cplx> u, bool adjoint);

/// 1D discrete Haar wavelet: synthesis W u (adjoint=false) or analysis W^T u.
///
/// Coefficients are ordered coarse to fine: the scaling coefficient first,
/// then the details of each dyadic level by position.
CVector dhw_apply(std::span<const cplx> u, bool adjoint);

/// Scaling-function matrix W^0 u. W^0 is rank deficient and NOT orthonormal;
/// it only describes the scaling columns that enter the 2D Haar blocks.
CVector dhw0_apply(std::span<const cplx> u);

/// 2D isotropic Haar basis on an n_p_bar x n_p_bar grid (pixel l_p fastest in x).
///
/// Coefficient order: the constant atom, then for each level l = 1..r the
/// blocks (scaling y, detail x), (detail y, scaling x), (detail y, detail x),
/// each holding |T_l|^2 = 4^(l-1) entries ordered (y position, x position).
/// adjoint=false synthesizes pixels from coefficients.
CVector idhw_apply(std::span<const cplx> u, bool adjoint);

// LinearMap factories. Each map's forward is the matrix of the same name in the
// model (Phi_dft, Phi_had, Psi_dhw, Psi_idhw), the adjoint its conjugate
// transpose.

LinearMap dft_map(std::size_t n_xi);
LinearMap hadamard_map(std::size_t n_p);
LinearMap dhw_map(std::size_t n);
LinearMap idhw_map(std::size_t n_p_bar);

/// Phi_sp = Phi_had (x) Phi_dft on storage-ordered vectors.
LinearMap sensing_map(const Dims& dims);
/// Psi_sp = Psi_idhw (x) Psi_dhw on storage-ordered vectors.
LinearMap sparsity_map(const Dims& dims);
/// Phi_sp^* Psi_sp, mapping sparsity coefficients to full measurements.
LinearMap sensing_sparsity_map(const Dims& dims);

}  // namespace spfti
