#include "spfti/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include "spfti/errors.hpp"
#include "spfti/io.hpp"
#include "spfti/linear_map.hpp"
#include "spfti/rng.hpp"
#include "spfti/transforms.hpp"

namespace spfti {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_range(const char* name, std::size_t v, std::size_t hi) {
  if (v < 1 || v > hi) {
    throw RangeError(std::string(name) + "=" + std::to_string(v) + " outside [1, " +
                     std::to_string(hi) + "]");
  }
}

// |l_xi - n_xi/2|^{-1/2}, +inf at the center.
double opd_decay(std::size_t l_xi, std::size_t n_xi) {
  const double d = std::abs(static_cast<double>(l_xi) - static_cast<double>(n_xi) / 2.0);
  return d == 0.0 ? kInf : 1.0 / std::sqrt(d);
}

// 2^{-floor(log2(m - 1))}, +inf for m = 1.
double spatial_decay(std::size_t l_x, std::size_t l_y) {
  const std::size_t m = std::max(l_x, l_y);
  if (m == 1) return kInf;
  return std::ldexp(1.0, -ilog2(m - 1));
}

// Column-streamed row maxima of a square operator.
RVector row_max_abs(const LinearMap& op) {
  RVector mu(op.rows(), 0.0);
  CVector e(op.cols());
  CVector col(op.rows());
  for (std::size_t j = 0; j < op.cols(); ++j) {
    e[j] = 1.0;
    op.apply_into(e, col);
    for (std::size_t i = 0; i < op.rows(); ++i) mu[i] = std::max(mu[i], std::abs(col[i]));
    e[j] = 0.0;
  }
  return mu;
}

double sum_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

double kappa_xi(std::size_t l_xi, std::size_t n_xi) {
  check_range("l_xi", l_xi, n_xi);
  return std::numbers::sqrt2 * std::min(1.0, opd_decay(l_xi, n_xi));
}

double kappa_p(std::size_t l_x, std::size_t l_y, std::size_t n_p_bar) {
  check_range("l_x", l_x, n_p_bar);
  check_range("l_y", l_y, n_p_bar);
  return std::min(1.0, spatial_decay(l_x, l_y));
}

double kappa_full(const Index3D& idx, const Dims& dims, KappaVariant variant) {
  check_range("l_xi", idx.l_xi, dims.n_xi());
  check_range("l_x", idx.l_x, dims.n_p_bar());
  check_range("l_y", idx.l_y, dims.n_p_bar());
  if (variant == KappaVariant::Product) {
    return kappa_xi(idx.l_xi, dims.n_xi()) * kappa_p(idx.l_x, idx.l_y, dims.n_p_bar());
  }
  const double prod = spatial_decay(idx.l_x, idx.l_y) * opd_decay(idx.l_xi, dims.n_xi());
  return std::numbers::sqrt2 * std::min(1.0, prod);
}

CoherenceProfile closed_form_profile(const Dims& dims, KappaVariant variant) {
  CoherenceProfile prof{dims, RVector(dims.n_hs()), 0.0,
                        variant == KappaVariant::Eq8 ? CoherenceProfile::Source::Eq8
                                                     : CoherenceProfile::Source::Product};
  for (std::size_t l = 1; l <= dims.n_hs(); ++l) {
    prof.kappa[l - 1] = kappa_full(unflatten(l, dims), dims, variant);
  }
  prof.kappa_sq_norm = sum_sq(prof.kappa);
  return prof;
}

CoherenceProfile brute_force_local_coherence(const Dims& dims, std::size_t cap) {
  if (dims.n_hs() > cap) {
    throw SizeError("brute-force coherence: n_hs=" + std::to_string(dims.n_hs()) +
                    " exceeds cap " + std::to_string(cap));
  }
  const RVector by_storage = row_max_abs(sensing_sparsity_map(dims));
  CoherenceProfile prof{dims, RVector(dims.n_hs()), 0.0, CoherenceProfile::Source::Brute};
  for (std::size_t l = 1; l <= dims.n_hs(); ++l) {
    prof.kappa[l - 1] = by_storage[storage_offset_of_flat(l, dims)];
  }
  prof.kappa_sq_norm = sum_sq(prof.kappa);
  return prof;
}

RVector dft_dhw_coherence(std::size_t n_xi) {
  return row_max_abs(compose(dft_map(n_xi).adjoint(), dhw_map(n_xi)));
}

RVector had_idhw_coherence(std::size_t n_p_bar) {
  const std::size_t n_p = n_p_bar * n_p_bar;
  return row_max_abs(compose(hadamard_map(n_p).adjoint(), idhw_map(n_p_bar)));
}

namespace {

// Neumaier summation; pmfs at (512, 64) have millions of entries.
double compensated_sum(std::span<const double> v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

RVector build_pmf(const Dims& dims, PmfVariant variant, KappaVariant kappa) {
  RVector p(dims.n_hs());
  switch (variant) {
    case PmfVariant::Uniform:
      std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(dims.n_hs()));
      return p;
    case PmfVariant::KappaSq:
      for (std::size_t l = 1; l <= dims.n_hs(); ++l) {
        const double k = kappa_full(unflatten(l, dims), dims, kappa);
        p[l - 1] = k * k;
      }
      break;
    case PmfVariant::Eq9:
      for (std::size_t l = 1; l <= dims.n_hs(); ++l) {
        const Index3D idx = unflatten(l, dims);
        const double d =
            std::abs(static_cast<double>(idx.l_xi) - static_cast<double>(dims.n_xi()) / 2.0);
        const double m = static_cast<double>(std::max(idx.l_x, idx.l_y));
        p[l - 1] = d == 0.0 ? 1.0 : std::min(1.0, 1.0 / (d * m));
      }
      break;
  }
  const double total = compensated_sum(p);
  for (double& v : p) v /= total;
  return p;
}

namespace {

void validate_pmf(std::span<const double> pmf) {
  if (pmf.empty()) throw ValidationError("pmf is empty");
  double total = 0.0;
  for (double v : pmf) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("pmf has a negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("pmf sums to " + io::format_double(total) + ", not 1");
  }
}

}  // namespace

SamplingPlan sample_omega(std::span<const double> pmf, std::size_t m, std::uint64_t seed) {
  validate_pmf(pmf);
  if (m < 1) throw ValidationError("sample_omega: m must be >= 1");
  RVector cdf(pmf.size());
  std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
  std::size_t last_positive = pmf.size() - 1;
  while (pmf[last_positive] == 0.0) --last_positive;

  SamplingPlan plan;
  plan.pmf.assign(pmf.begin(), pmf.end());
  plan.seed = seed;
  plan.m = m;
  plan.omega.reserve(m);
  plan.weights.reserve(m);
  Philox rng(seed);
  for (std::size_t j = 0; j < m; ++j) {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t idx = it == cdf.end() ? last_positive : static_cast<std::size_t>(it - cdf.begin());
    plan.omega.push_back(idx + 1);
    plan.weights.push_back(1.0 / std::sqrt(pmf[idx]));
  }
  return plan;
}

SamplingPlan full_plan(std::span<const double> pmf) {
  validate_pmf(pmf);
  SamplingPlan plan;
  plan.pmf.assign(pmf.begin(), pmf.end());
  plan.m = pmf.size();
  for (std::size_t l = 1; l <= pmf.size(); ++l) {
    if (pmf[l - 1] <= 0.0) throw ValidationError("full_plan: pmf must be positive everywhere");
    plan.omega.push_back(l);
    plan.weights.push_back(1.0 / std::sqrt(pmf[l - 1]));
  }
  return plan;
}

std::size_t sample_complexity(std::size_t k, double eps_fail, const Dims& dims,
                              KappaVariant variant, double c) {
  if (k < 1) throw ValidationError("sample_complexity: k must be >= 1");
  if (!(eps_fail > 0.0 && eps_fail <= 1.0)) {
    throw ValidationError("sample_complexity: failure probability must lie in (0, 1]");
  }
  const double norm = closed_form_profile(dims, variant).kappa_sq_norm;
  const double value = c * norm * static_cast<double>(k) * std::log(1.0 / eps_fail);
  return static_cast<std::size_t>(std::ceil(value));
}

void write_profile_csv(std::ostream& os, const Dims& dims, std::span<const double> values) {
  if (values.size() != dims.n_hs()) throw DimensionError("profile csv: length mismatch");
  os << "flat,l_xi,l_x,l_y,value\n";
  for (std::size_t l = 1; l <= dims.n_hs(); ++l) {
    const Index3D idx = unflatten(l, dims);
    os << l << ',' << idx.l_xi << ',' << idx.l_x << ',' << idx.l_y << ','
       << io::format_double(values[l - 1]) << '\n';
  }
}

RVector profile_slice(const Dims& dims, std::span<const double> values, std::size_t l_xi) {
  check_range("l_xi", l_xi, dims.n_xi());
  if (values.size() != dims.n_hs()) throw DimensionError("profile slice: length mismatch");
  const std::size_t nb = dims.n_p_bar();
  RVector grid(nb * nb);
  for (std::size_t ly = 1; ly <= nb; ++ly)
    for (std::size_t lx = 1; lx <= nb; ++lx)
      grid[(ly - 1) * nb + (lx - 1)] = values[flat_index({l_xi, lx, ly}, dims) - 1];
  return grid;
}

void write_profile_pgm(const std::filesystem::path& dir, const std::string& stem,
                       const Dims& dims, std::span<const double> values) {
  for (std::size_t l_xi = 1; l_xi <= dims.n_xi(); ++l_xi) {
    const RVector grid = profile_slice(dims, values, l_xi);
    io::write_pgm(dir / (stem + "_xi" + std::to_string(l_xi) + ".pgm"), dims.n_p_bar(),
                  dims.n_p_bar(), grid);
  }
}

}  // namespace spfti
