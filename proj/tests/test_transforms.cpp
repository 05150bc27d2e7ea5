#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "spfti/errors.hpp"
#include "spfti/transforms.hpp"

using namespace spfti;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

double unitarity_error(const DenseMatrix& m) {
  return (m.adjoint() * m).max_abs_diff(DenseMatrix::identity(m.cols()));
}

double relative_error(const CVector& a, const CVector& b) {
  return oracle::max_abs_diff(a, b) / std::max(1e-300, std::sqrt(norm2(b) * norm2(b) / b.size()));
}

}  // namespace

TEST(Dft, ConstantMapsToCenterRow) {
  for (std::size_t n : {4u, 8u, 64u}) {
    CVector u(n, 1.0 / std::sqrt(static_cast<double>(n)));
    const CVector f = dft_apply(u, false);
    for (std::size_t r = 0; r < n; ++r) {
      const double expect = r == n / 2 - 1 ? 1.0 : 0.0;
      EXPECT_NEAR(std::abs(f[r] - expect), 0.0, 1e-12) << "n=" << n << " r=" << r;
    }
  }
}

TEST(Dft, PreservesNorm) {
  const CVector u = oracle::random_vector(256, 1);
  EXPECT_NEAR(norm2(dft_apply(u, false)), norm2(u), 1e-12 * norm2(u));
  EXPECT_NEAR(norm2(dft_apply(u, true)), norm2(u), 1e-12 * norm2(u));
  EXPECT_LT(oracle::max_abs_diff(dft_apply(dft_apply(u, false), true), u), 1e-12);
}

TEST(Dft, DenseMatchesExplicitCenteredMatrix) {
  for (std::size_t n : {4u, 8u, 16u}) {
    EXPECT_LT(densify(dft_map(n)).max_abs_diff(oracle::centered_dft(n)), 1e-12) << n;
  }
}

TEST(Dft, RejectsNonPowerOfTwo) {
  CVector u(6);
  EXPECT_THROW(dft_apply(u, false), DimensionError);
  EXPECT_THROW(dft_map(12), DimensionError);
}

TEST(Hadamard, TwoByTwo) {
  CVector e1{1.0, 0.0};
  const CVector h = fwht_paley(e1, false);
  EXPECT_NEAR(h[0].real(), kInvSqrt2, 1e-15);
  EXPECT_NEAR(h[1].real(), kInvSqrt2, 1e-15);
  const DenseMatrix d = densify(hadamard_map(2));
  EXPECT_LT(d.max_abs_diff(oracle::real_matrix(2, 2, {kInvSqrt2, kInvSqrt2, kInvSqrt2, -kInvSqrt2})), 1e-15);
}

TEST(Hadamard, MatchesPaleyRecursion) {
  for (std::size_t n : {4u, 8u, 16u, 64u}) {
    EXPECT_LT(densify(hadamard_map(n)).max_abs_diff(oracle::hadamard(n)), 1e-12) << n;
  }
}

TEST(Hadamard, EntriesAreSignedInverseRoot) {
  for (std::size_t n : {4u, 16u, 64u}) {
    const DenseMatrix d = densify(hadamard_map(n));
    const double v = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_EQ(std::abs(d(i, j).real()), v);
        EXPECT_EQ(d(i, j).imag(), 0.0);
      }
  }
}

TEST(Hadamard, SelfInverse) {
  const CVector u = oracle::random_vector(512, 2);
  EXPECT_LT(oracle::max_abs_diff(fwht_paley(fwht_paley(u, false), true), u), 1e-12);
}

TEST(Haar, TwoAndFour) {
  EXPECT_LT(densify(dhw_map(2)).max_abs_diff(
                oracle::real_matrix(2, 2, {kInvSqrt2, kInvSqrt2, kInvSqrt2, -kInvSqrt2})),
            1e-15);
  // Columns (1,1,1,1)/2, (1,1,-1,-1)/2, (1,-1,0,0)/sqrt2, (0,0,1,-1)/sqrt2.
  const double h = 0.5, r = kInvSqrt2;
  const DenseMatrix expect = oracle::real_matrix(4, 4, {h, h, r, 0,   //
                                                        h, h, -r, 0,  //
                                                        h, -h, 0, r,  //
                                                        h, -h, 0, -r});
  const DenseMatrix w4 = densify(dhw_map(4));
  EXPECT_LT(w4.max_abs_diff(expect), 1e-15);
  EXPECT_LT(unitarity_error(w4), 1e-15);
}

TEST(Haar, MatchesRecursion) {
  for (std::size_t n : {8u, 16u, 32u}) {
    EXPECT_LT(densify(dhw_map(n)).max_abs_diff(oracle::haar(n)), 1e-12) << n;
  }
  const CVector u = oracle::random_vector(1024, 3);
  EXPECT_NEAR(norm2(dhw_apply(u, false)), norm2(u), 1e-12 * norm2(u));
}

TEST(Haar0, MatchesRecursionAndIsRankDeficient) {
  for (std::size_t n : {2u, 4u, 8u}) {
    DenseMatrix d(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      CVector e(n);
      e[j] = 1.0;
      const CVector c = dhw0_apply(e);
      for (std::size_t i = 0; i < n; ++i) d(i, j) = c[i];
    }
    EXPECT_LT(d.max_abs_diff(oracle::haar0(n)), 1e-15) << n;
  }
  const DenseMatrix w2 = oracle::haar0(2);
  EXPECT_EQ(w2(0, 0), w2(1, 0));
  EXPECT_EQ(w2(0, 1), w2(1, 1));
}

TEST(Idhw, TwoByTwo) {
  const DenseMatrix d = densify(idhw_map(2));
  EXPECT_LT(unitarity_error(d), 1e-15);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(d(i, 0).real(), 0.5, 1e-15);
}

TEST(Idhw, MatchesBlockAssembly) {
  for (std::size_t n : {2u, 4u, 8u, 16u}) {
    const DenseMatrix d = densify(idhw_map(n));
    EXPECT_EQ(d.cols(), n * n);
    EXPECT_LT(d.max_abs_diff(oracle::idhw(n)), 1e-12) << n;
  }
}

TEST(Idhw, RejectsWrongLength) {
  CVector u(8);
  EXPECT_THROW(idhw_apply(u, false), DimensionError);
}

TEST(Kron, IdentityFactorsLeaveInputUnchanged) {
  const CVector u = oracle::random_vector(32, 4);
  EXPECT_EQ(kron_apply(identity_map(4), identity_map(8), u, false), u);
}

TEST(Kron, MatchesDenseProduct) {
  const Dims dims(4, 2);
  const LinearMap had = hadamard_map(dims.n_p());
  const LinearMap dft = dft_map(dims.n_xi());
  const DenseMatrix dense = kron(densify(had), densify(dft));
  const CVector u = oracle::random_vector(dims.n_hs(), 5);
  EXPECT_LT(relative_error(kron_apply(had, dft, u, false), dense * u), 1e-12);
  EXPECT_LT(relative_error(kron_apply(had, dft, u, true), dense.adjoint() * u), 1e-12);
  EXPECT_LT(densify(sensing_map(dims)).max_abs_diff(dense), 1e-12);
}

TEST(Kron, RejectsLengthMismatch) {
  CVector u(10);
  EXPECT_THROW(kron_apply(identity_map(2), identity_map(4), u, false), DimensionError);
}

TEST(Densify, IdentityAndCap) {
  EXPECT_EQ(densify(identity_map(4)).max_abs_diff(DenseMatrix::identity(4)), 0.0);
  EXPECT_THROW(densify(identity_map(64), 1000), SizeError);
}

// Orthonormality and fast-vs-dense agreement across the testable sizes.
TEST(Bases, OrthonormalAndFastMatchesDense) {
  std::uint64_t seed = 10;
  for (std::size_t n_xi : {4u, 8u, 16u}) {
    for (std::size_t n_bar : {2u, 4u, 8u}) {
      const Dims dims(n_xi, n_bar);
      for (const LinearMap& m : {dft_map(n_xi), hadamard_map(dims.n_p()), dhw_map(n_xi), idhw_map(n_bar),
                                 sensing_map(dims), sparsity_map(dims)}) {
        const DenseMatrix d = densify(m);
        EXPECT_LT(unitarity_error(d), 1e-10) << m.name() << " " << n_xi << "," << n_bar;
        const CVector u = oracle::random_vector(m.cols(), ++seed);
        EXPECT_LT(relative_error(m.apply(u), d * u), 1e-12) << m.name();
        EXPECT_LT(relative_error(m.apply_adjoint(u), d.adjoint() * u), 1e-12) << m.name();
      }
      const DenseMatrix phi = densify(sensing_map(dims));
      EXPECT_LT(phi.max_abs_diff(kron(densify(hadamard_map(dims.n_p())), densify(dft_map(n_xi)))), 1e-12);
      const DenseMatrix psi = densify(sparsity_map(dims));
      EXPECT_LT(psi.max_abs_diff(kron(densify(idhw_map(n_bar)), densify(dhw_map(n_xi)))), 1e-12);
    }
  }
}

TEST(Bases, AdjointConsistency) {
  const Dims dims(16, 8);
  std::uint64_t seed = 100;
  for (const LinearMap& m : {dft_map(64), hadamard_map(256), dhw_map(128), idhw_map(16), sensing_map(dims),
                             sparsity_map(dims), sensing_sparsity_map(dims)}) {
    for (int trial = 0; trial < 5; ++trial) {
      const CVector u = oracle::random_vector(m.cols(), ++seed);
      const CVector v = oracle::random_vector(m.rows(), ++seed);
      const double gap = std::abs(inner(m.apply(u), v) - inner(u, m.apply_adjoint(v)));
      EXPECT_LE(gap, 1e-10 * norm2(u) * norm2(v)) << m.name();
    }
  }
}

TEST(Bases, RealInputsStayReal) {
  const Dims dims(16, 4);
  const CVector u = oracle::random_vector(dims.n_hs(), 7, false);
  for (const CVector& out : {sparsity_map(dims).apply(u), sparsity_map(dims).apply_adjoint(u)}) {
    for (const cplx& c : out) EXPECT_EQ(c.imag(), 0.0);
  }
}
