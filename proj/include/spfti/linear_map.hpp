#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>

#include "spfti/dims.hpp"

namespace spfti {

enum class Field { Real, Complex };

/// Matrix-free linear operator with forward and adjoint kernels.
///
/// Kernels write into a caller-provided output span and must not keep state
/// between calls, so one LinearMap can be applied from several threads.
/// Real maps act on the real and imaginary parts independently.
class LinearMap {
 public:
  using Kernel = std::function<void(std::span<const cplx>, std::span<cplx>)>;

  LinearMap(std::string name, std::size_t rows, std::size_t cols, Field field, Kernel forward,
            Kernel adjoint);

  const std::string& name() const { return name_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Field field() const { return field_; }

  CVector apply(std::span<const cplx> u) const;
  CVector apply_adjoint(std::span<const cplx> v) const;
  void apply_into(std::span<const cplx> u, std::span<cplx> out) const;
  void apply_adjoint_into(std::span<const cplx> v, std::span<cplx> out) const;

  /// The conjugate-transpose as a map of its own.
  LinearMap adjoint() const;

 private:
  std::string name_;
  std::size_t rows_;
  std::size_t cols_;
  Field field_;
  Kernel forward_;
  Kernel adjoint_;
};

LinearMap identity_map(std::size_t n);

/// a * b (apply b first).
LinearMap compose(const LinearMap& a, const LinearMap& b);

/// The Kronecker product a (x) b acting on vec(U), U of shape cols(b) x cols(a).
///
/// b runs along the fast (contiguous) axis and a along the strided one,
/// so the product is never materialized.
LinearMap kron(const LinearMap& a, const LinearMap& b);

/// One-shot application of a (x) b, or its adjoint.
CVector kron_apply(const LinearMap& a, const LinearMap& b, std::span<const cplx> u, bool adjoint);

/// Row-major dense complex matrix, used for oracles and debugging exports.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  cplx operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  static DenseMatrix identity(std::size_t n);

  DenseMatrix adjoint() const;
  DenseMatrix operator*(const DenseMatrix& rhs) const;
  CVector operator*(std::span<const cplx> v) const;

  /// max_ij |a_ij - b_ij|.
  double max_abs_diff(const DenseMatrix& other) const;
  /// max_j |row i|_j.
  double row_max_abs(std::size_t i) const;

  /// One line per row; complex entries are written as re+imj.
  void write_csv(std::ostream& os) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  CVector data_;
};

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);

inline constexpr std::size_t kDefaultDensifyCap = std::size_t{1} << 20;

/// Materializes a map by applying it to every standard basis vector.
/// Throws SizeError when rows * cols exceeds `cap`.
DenseMatrix densify(const LinearMap& map, std::size_t cap = kDefaultDensifyCap);

/// Complex inner product <a, b> = sum conj(a_i) b_i.
cplx inner(std::span<const cplx> a, std::span<const cplx> b);
double norm2(std::span<const cplx> a);

}  // namespace spfti
