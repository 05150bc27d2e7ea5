#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace spfti {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;
using RVector = std::vector<double>;

bool is_power_of_two(std::size_t n);
/// log2 of a power of two.
int ilog2(std::size_t n);

/// Problem dimensions of an SP-FTI volume.
///
/// `n_xi` OPD samples (equal to the number of wavenumber samples) and
/// `n_p_bar` pixels per spatial axis. Both must be powers of two >= 2.
class Dims {
 public:
  Dims(std::size_t n_xi, std::size_t n_p_bar);

  std::size_t n_xi() const { return n_xi_; }
  std::size_t n_p_bar() const { return n_p_bar_; }
  std::size_t n_p() const { return n_p_bar_ * n_p_bar_; }
  std::size_t n_hs() const { return n_xi_ * n_p(); }

  friend bool operator==(const Dims&, const Dims&) = default;

 private:
  std::size_t n_xi_;
  std::size_t n_p_bar_;
};

/// 1-based (OPD, x-frequency, y-frequency) triple.
struct Index3D {
  std::size_t l_xi = 1;
  std::size_t l_x = 1;
  std::size_t l_y = 1;

  friend bool operator==(const Index3D&, const Index3D&) = default;
};

/// 1-based spatial pattern index l_p = n_p_bar (l_y - 1) + l_x.
std::size_t pattern_index(std::size_t l_x, std::size_t l_y, const Dims& dims);

/// 1-based label l = n_p (l_xi - 1) + n_p_bar (l_y - 1) + l_x.
///
/// This label orders pmfs, coherence profiles and sampled multisets.
/// Throws RangeError for out-of-range components.
std::size_t flat_index(const Index3D& idx, const Dims& dims);

/// Inverse of flat_index. Throws RangeError unless 1 <= l <= n_hs.
Index3D unflatten(std::size_t l, const Dims& dims);

/// 0-based offset of a 3D index inside volume-shaped vectors.
///
/// Volumes and their sensing/sparsity coefficients are stored as vec(X) for
/// X of shape n_xi x n_p, so the OPD/wavenumber index runs fastest:
/// offset = n_xi (l_p - 1) + (l_xi - 1). Kronecker operators A (x) B act on
/// this layout with B along the fast axis.
std::size_t storage_offset(const Index3D& idx, const Dims& dims);

/// storage_offset(unflatten(l)) without materializing the triple.
std::size_t storage_offset_of_flat(std::size_t l, const Dims& dims);

/// Real-valued hyperspectral volume in storage order.
class HSVolume {
 public:
  HSVolume(Dims dims, RVector data);
  static HSVolume zeros(Dims dims);

  const Dims& dims() const { return dims_; }
  const RVector& data() const { return data_; }
  RVector& data() { return data_; }

  /// Voxel at 1-based wavenumber index and 1-based pixel index l_p.
  double& at(std::size_t l_nu, std::size_t l_p);
  double at(std::size_t l_nu, std::size_t l_p) const;

  CVector to_complex() const;
  double norm() const;

 private:
  Dims dims_;
  RVector data_;
};

}  // namespace spfti
