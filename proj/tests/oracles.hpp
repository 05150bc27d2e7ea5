#pragma once

// Dense reference constructions, written from the recursive definitions and
// kept independent of the fast kernels they check.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "spfti/linear_map.hpp"
#include "spfti/rng.hpp"

namespace oracle {

using spfti::cplx;
using spfti::CVector;
using spfti::DenseMatrix;

inline DenseMatrix real_matrix(std::size_t r, std::size_t c, const std::vector<double>& rowmajor) {
  DenseMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rowmajor[i * c + j];
  return m;
}

// [A (x) col0 , B (x) col1] / sqrt(2), with col0/col1 two-row columns.
inline DenseMatrix stack_recursion(const DenseMatrix& a, const DenseMatrix& b, double s0, double s1,
                                   double t0, double t1) {
  const std::size_t n = a.rows();
  DenseMatrix out(2 * n, a.cols() + b.cols());
  const double h = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out(2 * i, j) = h * s0 * a(i, j);
      out(2 * i + 1, j) = h * s1 * a(i, j);
    }
    for (std::size_t j = 0; j < b.cols(); ++j) {
      out(2 * i, a.cols() + j) = h * t0 * b(i, j);
      out(2 * i + 1, a.cols() + j) = h * t1 * b(i, j);
    }
  }
  return out;
}

// H_1 = [1]; H_2n = [H_n (x) (1,1)^T, H_n (x) (1,-1)^T] / sqrt(2).
inline DenseMatrix hadamard(std::size_t n) {
  DenseMatrix h = DenseMatrix::identity(1);
  while (h.rows() < n) h = stack_recursion(h, h, 1, 1, 1, -1);
  return h;
}

// W_1 = [1]; W_2n = [W_n (x) (1,1)^T, I_n (x) (1,-1)^T] / sqrt(2).
inline DenseMatrix haar(std::size_t n) {
  DenseMatrix w = DenseMatrix::identity(1);
  while (w.rows() < n) w = stack_recursion(w, DenseMatrix::identity(w.rows()), 1, 1, 1, -1);
  return w;
}

// W0_1 = [1]; W0_2n = [W0_n (x) (1,1)^T, I_n (x) (1,1)^T] / sqrt(2).
inline DenseMatrix haar0(std::size_t n) {
  DenseMatrix w = DenseMatrix::identity(1);
  while (w.rows() < n) w = stack_recursion(w, DenseMatrix::identity(w.rows()), 1, 1, 1, 1);
  return w;
}

// Columns T_l = {2^(l-1)+1, ..., 2^l} (1-based) of m.
inline DenseMatrix level_columns(const DenseMatrix& m, std::size_t level) {
  const std::size_t first = std::size_t{1} << (level - 1);
  DenseMatrix out(m.rows(), first);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < first; ++j) out(i, j) = m(i, first + j);
  return out;
}

// [Psi_0 | per level: (W0_T (x) W_T), (W_T (x) W0_T), (W_T (x) W_T)].
inline DenseMatrix idhw(std::size_t n_bar) {
  const std::size_t n = n_bar * n_bar;
  const DenseMatrix w = haar(n_bar);
  const DenseMatrix w0 = haar0(n_bar);
  DenseMatrix out(n, n);
  std::size_t col = 0;
  for (std::size_t i = 0; i < n; ++i) out(i, 0) = 1.0 / std::sqrt(static_cast<double>(n));
  ++col;
  for (std::size_t level = 1; (std::size_t{1} << level) <= n_bar; ++level) {
    const DenseMatrix wt = level_columns(w, level);
    const DenseMatrix w0t = level_columns(w0, level);
    for (const DenseMatrix& block : {kron(w0t, wt), kron(wt, w0t), kron(wt, wt)}) {
      for (std::size_t j = 0; j < block.cols(); ++j, ++col)
        for (std::size_t i = 0; i < n; ++i) out(i, col) = block(i, j);
    }
  }
  return out;
}

// Phi_dft: column l (1-based) is exp(2 pi i (l - n/2) t / n) / sqrt(n), t = 0..n-1.
inline DenseMatrix centered_dft(std::size_t n) {
  DenseMatrix f(n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t l = 1; l <= n; ++l) {
      const double freq = static_cast<double>(l) - static_cast<double>(n / 2);
      const double ang = 2.0 * std::numbers::pi * freq * static_cast<double>(t) / static_cast<double>(n);
      f(t, l - 1) = std::polar(s, ang);
    }
  }
  return f;
}

inline CVector random_vector(std::size_t n, std::uint64_t seed, bool complex_valued = true) {
  spfti::Philox rng(seed);
  CVector v(n);
  for (cplx& c : v) c = {rng.normal(), complex_valued ? rng.normal() : 0.0};
  return v;
}

inline double max_abs_diff(const CVector& a, const CVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
