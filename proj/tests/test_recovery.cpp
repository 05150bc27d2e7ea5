#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "spfti/acquisition.hpp"
#include "spfti/errors.hpp"
#include "spfti/recovery.hpp"
#include "spfti/transforms.hpp"

using namespace spfti;

namespace {

double l1(const CVector& v) {
  double s = 0;
  for (const cplx& c : v) s += std::abs(c);
  return s;
}

double rel_err(const CVector& a, const CVector& b) {
  CVector d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norm2(d) / norm2(b);
}

// x = Psi_sp s with k random +-1 coefficients.
HSVolume sparse_volume(const Dims& d, std::size_t k, std::uint64_t seed) {
  Philox rng(seed);
  CVector s(d.n_hs());
  std::size_t placed = 0;
  while (placed < k) {
    const std::size_t i = rng.next_u64() % d.n_hs();
    if (s[i] != 0.0) continue;
    s[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    ++placed;
  }
  const CVector x = sparsity_map(d).apply(s);
  RVector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i].real();
  return HSVolume(d, r);
}

// Solves (A A^H + delta I) z = y by Gaussian elimination with partial pivoting
// and returns the Tikhonov estimate A^H z.
CVector tikhonov(const DenseMatrix& a, const CVector& y, double delta) {
  const std::size_t m = a.rows();
  DenseMatrix g = a * a.adjoint();
  for (std::size_t i = 0; i < m; ++i) g(i, i) += delta;
  CVector b = y;
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < m; ++r)
      if (std::abs(g(r, c)) > std::abs(g(piv, c))) piv = r;
    for (std::size_t j = 0; j < m; ++j) std::swap(g(c, j), g(piv, j));
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < m; ++r) {
      const cplx f = g(r, c) / g(c, c);
      for (std::size_t j = c; j < m; ++j) g(r, j) -= f * g(c, j);
      b[r] -= f * b[c];
    }
  }
  CVector z(m);
  for (std::size_t c = m; c-- > 0;) {
    cplx acc = b[c];
    for (std::size_t j = c + 1; j < m; ++j) acc -= g(c, j) * z[j];
    z[c] = acc / g(c, c);
  }
  return a.adjoint() * z;
}

// pinv(A) y by Richardson extrapolation of the Tikhonov path: the O(delta)
// bias cancels in 2 x(delta) - x(2 delta).
CVector dense_min_norm(const DenseMatrix& a, const CVector& y) {
  const double delta = 1e-6;
  const CVector x1 = tikhonov(a, y, delta);
  const CVector x2 = tikhonov(a, y, 2 * delta);
  CVector out(x1.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0 * x1[i] - x2[i];
  return out;
}

DenseMatrix sampled_rows(const Dims& d, const std::vector<std::size_t>& omega) {
  const DenseMatrix full = densify(sensing_map(d)).adjoint();
  DenseMatrix a(omega.size(), d.n_hs());
  for (std::size_t j = 0; j < omega.size(); ++j) {
    const std::size_t r = storage_offset_of_flat(omega[j], d);
    for (std::size_t c = 0; c < d.n_hs(); ++c) a(j, c) = full(r, c);
  }
  return a;
}

double weighted_norm(const CVector& y, const SamplingPlan& plan) {
  double s = 0;
  for (std::size_t j = 0; j < y.size(); ++j) s += std::norm(plan.weights[j] * y[j]);
  return std::sqrt(s);
}

}  // namespace

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.feasibility_tolerance = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.objective_tolerance = -1;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Bpdn, ZeroMeasurementsGiveZero) {
  const Dims d(8, 4);
  const SamplingPlan plan = sample_omega(build_pmf(d, PmfVariant::KappaSq), 40, 1);
  const MeasurementSet ms = compressive_acquire(HSVolume::zeros(d), plan, 0.0, 0);
  for (double eps : {0.0, 1.0}) {
    const RecoveryResult r = solve_bpdn(ms, plan, eps);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(norm2(r.x_hat), 0.0);
  }
}

TEST(Bpdn, LargeEpsilonGivesZero) {
  const Dims d(8, 4);
  const HSVolume x = sparse_volume(d, 4, 2);
  const SamplingPlan plan = sample_omega(build_pmf(d, PmfVariant::KappaSq), 60, 2);
  const MeasurementSet ms = compressive_acquire(x, plan, 0.0, 0);
  const RecoveryResult r = solve_bpdn(ms, plan, weighted_norm(ms.y, plan) * 1.0001);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(norm2(r.x_hat), 0.0);
}

TEST(Bpdn, NegativeEpsilonRejected) {
  const Dims d(4, 2);
  const SamplingPlan plan = sample_omega(build_pmf(d, PmfVariant::KappaSq), 8, 1);
  const MeasurementSet ms = compressive_acquire(HSVolume::zeros(d), plan, 0.0, 0);
  EXPECT_THROW(solve_bpdn(ms, plan, -1.0), ValidationError);
}

TEST(Bpdn, ExactSparseRecovery) {
  const Dims d(32, 8);
  const SamplingPlan plan = sample_omega(build_pmf(d, PmfVariant::KappaSq), d.n_hs() / 2, 3);
  for (std::uint64_t t = 0; t < 3; ++t) {
    const HSVolume x = sparse_volume(d, 5, 100 + t);
    const MeasurementSet ms = compressive_acquire(x, plan, 0.0, 0);
    const RecoveryResult r = solve_bpdn(ms, plan, 0.0);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(rel_err(r.x_hat, x.to_complex()), 1e-4) << t;
  }
}

TEST(Bpdn, ResultInvariantsAndObjectiveSanity) {
  const Dims d(16, 8);
  const RVector pmf = build_pmf(d, PmfVariant::KappaSq);
  for (std::uint64_t t = 0; t < 4; ++t) {
    const HSVolume x = sparse_volume(d, 8, 200 + t);
    const SamplingPlan plan = sample_omega(pmf, d.n_hs() / 3, 10 + t);
    const double sigma = 0.01;
    const MeasurementSet ms = compressive_acquire(x, plan, sigma, 20 + t);
    const double eps = calibrate_epsilon(sigma, pmf, plan.m, d, 100, 0.95, 30 + t);
    const RecoveryResult r = solve_bpdn(ms, plan, eps);
    ASSERT_TRUE(r.converged) << t;
    // x_hat = Psi s_hat and the reported norms are those of the estimate.
    EXPECT_LE(oracle::max_abs_diff(sparsity_map(d).apply(r.s_hat), r.x_hat), 1e-10);
    EXPECT_NEAR(r.l1_norm, l1(r.s_hat), 1e-9 * r.l1_norm);
    EXPECT_NEAR(r.residual_norm, weighted_residual(ms, plan, r.x_hat), 1e-9 * eps);
    EXPECT_LE(r.residual_norm, eps * (1 + 1e-4));
    const double true_residual = weighted_residual(ms, plan, x.to_complex());
    if (true_residual <= eps) {
      EXPECT_LE(r.l1_norm, l1(sparsity_map(d).apply_adjoint(x.to_complex())) * (1 + 1e-4));
    }
    // Error bound for exactly sparse x: ||x - x_hat|| <= eps up to the solver tolerance.
    CVector diff = r.x_hat;
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= x.data()[i];
    EXPECT_LE(norm2(diff), eps * (1 + 1e-3));
  }
}

// Real volumes have Hermitian spectra along xi. When Omega also holds the
// mirror label of every sample, the program is conjugation invariant and the
// estimate stays real.
TEST(Bpdn, RealVolumeWithMirroredOmegaGivesRealEstimate) {
  const Dims d(16, 4);
  const HSVolume x = sparse_volume(d, 6, 5);
  const RVector pmf = build_pmf(d, PmfVariant::KappaSq);
  SamplingPlan plan = sample_omega(pmf, d.n_hs() / 4, 5);
  const std::size_t m0 = plan.omega.size();
  for (std::size_t j = 0; j < m0; ++j) {
    Index3D idx = unflatten(plan.omega[j], d);
    idx.l_xi = idx.l_xi < d.n_xi() ? d.n_xi() - idx.l_xi : d.n_xi();
    const std::size_t mirror = flat_index(idx, d);
    plan.omega.push_back(mirror);
    plan.weights.push_back(1.0 / std::sqrt(pmf[mirror - 1]));
  }
  plan.m = plan.omega.size();
  const MeasurementSet ms = compressive_acquire(x, plan, 0.0, 0);
  const RecoveryResult r = solve_bpdn(ms, plan, 0.0);
  EXPECT_TRUE(r.converged);
  double imag = 0;
  for (const cplx& c : r.x_hat) imag = std::max(imag, std::abs(c.imag()));
  EXPECT_LE(imag, 1e-9 * norm2(r.x_hat));
}

TEST(Bpdn, RealCoefficientOption) {
  const Dims d(32, 8);
  const HSVolume x = sparse_volume(d, 5, 100);
  const SamplingPlan plan = sample_omega(build_pmf(d, PmfVariant::KappaSq), d.n_hs() / 2, 3);
  const MeasurementSet ms = compressive_acquire(x, plan, 0.0, 0);
  SolverConfig cfg;
  cfg.real_coefficients = true;
  const RecoveryResult r = solve_bpdn(ms, plan, 0.0, cfg);
  EXPECT_TRUE(r.converged);
  for (const cplx& c : r.s_hat) EXPECT_EQ(c.imag(), 0.0);
  EXPECT_LE(rel_err(r.x_hat, x.to_complex()), 1e-4);
  // Without the restriction the complex optimum can only be lower.
  EXPECT_LE(solve_bpdn(ms, plan, 0.0).l1_norm, r.l1_norm * (1 + 1e-4));
}

TEST(Bpdn, IterationCapReportsNotConverged) {
  const Dims d(16, 8);
  const HSVolume x = sparse_volume(d, 30, 6);
  const SamplingPlan plan = sample_omega(build_pmf(d, PmfVariant::KappaSq), d.n_hs() / 4, 6);
  const MeasurementSet ms = compressive_acquire(x, plan, 0.05, 6);
  SolverConfig cfg;
  cfg.max_iterations = 2;
  const RecoveryResult r = solve_bpdn(ms, plan, 1e-3, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.iterations, 2u);
}

TEST(Bpdn, TraceRecordedAndExported) {
  const Dims d(8, 4);
  const HSVolume x = sparse_volume(d, 4, 7);
  const SamplingPlan plan = sample_omega(build_pmf(d, PmfVariant::KappaSq), 64, 7);
  const MeasurementSet ms = compressive_acquire(x, plan, 0.0, 0);
  SolverConfig cfg;
  cfg.record_trace = true;
  const RecoveryResult r = solve_bpdn(ms, plan, 0.0, cfg);
  ASSERT_FALSE(r.trace.empty());
  EXPECT_EQ(r.trace.front().iteration, 1u);
  std::ostringstream os;
  write_trace_csv(os, r.trace);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "iteration,objective,residual,rho");
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), r.trace.size() + 1);
}

TEST(Me, FullOmegaInvertsAcquisition) {
  const Dims d(16, 8);
  const CVector v = oracle::random_vector(d.n_hs(), 9, false);
  RVector r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
  const HSVolume x(d, r);
  const SamplingPlan plan = full_plan(build_pmf(d, PmfVariant::KappaSq));
  const RecoveryResult res = solve_me(compressive_acquire(x, plan, 0.0, 0), plan);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(rel_err(res.x_hat, x.to_complex()), 1e-8);
}

TEST(Me, MatchesDensePseudoInverse) {
  const Dims d(4, 2);
  const CVector v = oracle::random_vector(d.n_hs(), 10, false);
  RVector r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
  const HSVolume x(d, r);
  for (std::size_t m : {5u, 12u, 30u}) {
    const SamplingPlan plan = sample_omega(build_pmf(d, PmfVariant::KappaSq), m, m);
    const MeasurementSet ms = compressive_acquire(x, plan, 0.1, 3);
    const CVector oracle_x = dense_min_norm(sampled_rows(d, plan.omega), ms.y);
    const RecoveryResult res = solve_me(ms, plan);
    EXPECT_TRUE(res.converged);
    EXPECT_LE(oracle::max_abs_diff(res.x_hat, oracle_x), 1e-8) << m;
  }
}

TEST(Me, DuplicatedSingleIndexRankOne) {
  const Dims d(8, 4);
  const CVector v = oracle::random_vector(d.n_hs(), 11, false);
  RVector r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
  const HSVolume x(d, r);
  SamplingPlan plan = full_plan(build_pmf(d, PmfVariant::Uniform));
  const std::size_t l0 = 37;
  plan.omega = {l0, l0};
  plan.weights = {1.0, 1.0};
  plan.m = 2;
  const MeasurementSet ms = compressive_acquire(x, plan, 0.0, 0);
  CVector e(d.n_hs());
  e[storage_offset_of_flat(l0, d)] = sense_all(x)[l0 - 1];
  const CVector expect = sensing_map(d).apply(e);
  EXPECT_LE(oracle::max_abs_diff(solve_me(ms, plan).x_hat, expect), 1e-10);
}

TEST(Epsilon, ZeroSigma) {
  const Dims d(8, 4);
  EXPECT_EQ(calibrate_epsilon(0.0, build_pmf(d, PmfVariant::KappaSq), 20, d, 20, 0.95, 1), 0.0);
}

// Uniform pmf: d_jj = sqrt(n_hs), so ||Dn||^2 / (n_hs sigma^2) ~ chi^2 with 2M dof.
TEST(Epsilon, UniformMatchesChiSquaredQuantile) {
  const Dims d(16, 4);
  const std::size_t m = 64;
  const double sigma = 0.3;
  const double eps = calibrate_epsilon(sigma, build_pmf(d, PmfVariant::Uniform), m, d, 4000, 0.95, 3);
  const boost::math::chi_squared dist(2.0 * m);
  const double expect = std::sqrt(static_cast<double>(d.n_hs())) * sigma * std::sqrt(boost::math::quantile(dist, 0.95));
  EXPECT_NEAR(eps / expect, 1.0, 0.01);
}

TEST(Epsilon, NondecreasingInSigma) {
  const Dims d(8, 4);
  const RVector pmf = build_pmf(d, PmfVariant::KappaSq);
  double prev = 0;
  for (double s : {0.0, 0.01, 0.1, 0.2, 1.0, 3.0}) {
    const double eps = calibrate_epsilon(s, pmf, 30, d, 50, 0.95, 4);
    EXPECT_GE(eps, prev);
    prev = eps;
  }
}

TEST(Epsilon, Validation) {
  const Dims d(8, 4);
  const RVector pmf = build_pmf(d, PmfVariant::KappaSq);
  EXPECT_THROW(calibrate_epsilon(1.0, pmf, 30, d, 5, 0.95, 4), ValidationError);
  EXPECT_THROW(calibrate_epsilon(1.0, pmf, 30, d, 50, 1.0, 4), ValidationError);
  EXPECT_THROW(calibrate_epsilon(1.0, pmf, 30, d, 50, 0.0, 4), ValidationError);
}

TEST(Epsilon, FixedPlanCoversTrueNoise) {
  const Dims d(8, 4);
  const SamplingPlan plan = sample_omega(build_pmf(d, PmfVariant::KappaSq), 60, 5);
  const double eps = calibrate_epsilon_fixed(0.2, plan, 400, 0.95, 6);
  int covered = 0;
  for (std::uint64_t t = 0; t < 400; ++t) {
    const MeasurementSet ms = compressive_acquire(HSVolume::zeros(d), plan, 0.2, 1000 + t);
    covered += weighted_norm(ms.y, plan) <= eps;
  }
  EXPECT_NEAR(covered / 400.0, 0.95, 0.035);
}

TEST(Rsnr, Examples) {
  const Dims d(4, 2);
  RVector a(d.n_hs(), 1.0);
  const HSVolume x(d, a);
  EXPECT_EQ(rsnr(x, x), std::numeric_limits<double>::infinity());
  RVector near(a);
  near[3] += 1e-14;
  EXPECT_EQ(rsnr(x, HSVolume(d, near)), std::numeric_limits<double>::infinity());
  EXPECT_NEAR(rsnr(x, HSVolume::zeros(d)), 0.0, 1e-12);
  RVector b(d.n_hs(), 1.1);
  EXPECT_NEAR(rsnr(x, HSVolume(d, b)), 20.0, 1e-9);
  EXPECT_THROW(rsnr(HSVolume::zeros(d), x), ValidationError);
  EXPECT_THROW(rsnr(x, HSVolume::zeros(Dims(4, 4))), DimensionError);
}

TEST(Rsnr, SnrRoundTrip) {
  const Dims d(16, 8);
  const CVector v = oracle::random_vector(d.n_hs(), 12, false);
  RVector r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
  const HSVolume x(d, r);
  const double sigma = snr_to_sigma(x, 15.0);
  double e2 = 0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    Philox rng(t);
    for (std::size_t i = 0; i < d.n_hs(); ++i) {
      const double z = sigma * rng.normal();
      e2 += z * z;
    }
  }
  const double sigma2_hat = e2 / (20.0 * d.n_hs());
  EXPECT_NEAR(10 * std::log10(x.norm() * x.norm() / (sigma2_hat * d.n_hs())), 15.0, 0.2);
  EXPECT_EQ(snr_to_sigma(x, std::numeric_limits<double>::infinity()), 0.0);
}

TEST(SigmaK, TiesAndTail) {
  const CVector u{3.0, -1.0, 2.0, cplx(0, 2), 0.5};
  EXPECT_DOUBLE_EQ(sigma_k(u, 0), 8.5);
  EXPECT_DOUBLE_EQ(sigma_k(u, 1), 5.5);
  // Tie between index 2 and 3 keeps index 2; the remainder is still 1 + 2 + 0.5 or 2 + 1 + 0.5.
  EXPECT_DOUBLE_EQ(sigma_k(u, 2), 3.5);
  EXPECT_DOUBLE_EQ(sigma_k(u, 5), 0.0);
  EXPECT_DOUBLE_EQ(sigma_k(u, 10), 0.0);
}

TEST(SaveResult, WritesPayloadAndSidecar) {
  const Dims d(4, 2);
  RecoveryResult r;
  r.dims = d;
  r.x_hat = oracle::random_vector(d.n_hs(), 13);
  r.converged = true;
  const auto dir = std::filesystem::temp_directory_path() / "spfti_test_result";
  std::filesystem::remove_all(dir);
  save_result(r, dir / "r");
  EXPECT_EQ(read_complex_payload(dir / "r.bin", d.n_hs()), r.x_hat);
  std::ifstream js(dir / "r.json");
  const auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j["n_xi"], 4);
  EXPECT_EQ(j["converged"], true);
}
