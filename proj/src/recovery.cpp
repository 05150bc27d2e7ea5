#include "spfti/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "spfti/errors.hpp"
#include "spfti/io.hpp"
#include "spfti/linear_map.hpp"
#include "spfti/rng.hpp"
#include "spfti/transforms.hpp"

namespace spfti {

void SolverConfig::validate() const {
  if (max_iterations == 0) throw ValidationError("max_iterations must be >= 1");
  if (!(feasibility_tolerance > 0.0)) throw ValidationError("feasibility_tolerance must be > 0");
  if (!(objective_tolerance > 0.0)) throw ValidationError("objective_tolerance must be > 0");
}

HSVolume RecoveryResult::volume() const {
  RVector re(x_hat.size());
  for (std::size_t i = 0; i < x_hat.size(); ++i) re[i] = x_hat[i].real();
  return HSVolume(dims, std::move(re));
}

namespace {

enum : std::uint64_t { kTagOmega = 0x0E1, kTagNoise = 0x0E2 };

// ADMM over-relaxation factor.
constexpr double kRelax = 1.7;

void check_plan(const MeasurementSet& ms, const SamplingPlan& plan) {
  if (plan.pmf.size() != ms.dims.n_hs()) throw DimensionError("plan and measurements differ in n_hs");
  if (plan.omega != ms.omega) throw ValidationError("plan multiset differs from the measured one");
  if (plan.weights.size() != plan.omega.size()) throw DimensionError("plan weights/omega mismatch");
}

// The data-fidelity term regrouped by distinct label:
//   sum_j w_j^2 |y_j - v_{o(j)}|^2 = sum_l a_l |ybar_l - v_l|^2 + spread.
struct Fidelity {
  std::vector<std::size_t> offset;  // storage offsets of distinct labels
  RVector a;
  CVector ybar;
  double spread = 0.0;
  double dy_norm = 0.0;  // ||D y||

  Fidelity(const MeasurementSet& ms, const SamplingPlan& plan) {
    std::unordered_map<std::size_t, std::size_t> slot;
    for (std::size_t j = 0; j < ms.omega.size(); ++j) {
      const double w2 = plan.weights[j] * plan.weights[j];
      auto [it, fresh] = slot.emplace(ms.omega[j], offset.size());
      if (fresh) {
        offset.push_back(storage_offset_of_flat(ms.omega[j], ms.dims));
        a.push_back(0.0);
        ybar.emplace_back();
      }
      a[it->second] += w2;
      ybar[it->second] += w2 * ms.y[j];
      dy_norm += w2 * std::norm(ms.y[j]);
    }
    for (std::size_t l = 0; l < a.size(); ++l) ybar[l] /= a[l];
    for (std::size_t j = 0; j < ms.omega.size(); ++j) {
      const std::size_t l = slot.at(ms.omega[j]);
      spread += plan.weights[j] * plan.weights[j] * std::norm(ms.y[j] - ybar[l]);
    }
    dy_norm = std::sqrt(dy_norm);
  }

  // sum_l a_l |v_l - ybar_l|^2 for a volume-shaped v.
  double grouped(std::span<const cplx> v) const {
    double acc = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) acc += a[l] * std::norm(v[offset[l]] - ybar[l]);
    return acc;
  }

  double residual(std::span<const cplx> v) const {
    return std::sqrt(std::max(0.0, grouped(v) + spread));
  }

  // Euclidean projection of v onto {z : grouped(z) <= r^2}, in place.
  void project(CVector& v, double r) const {
    if (r <= 0.0) {
      for (std::size_t l = 0; l < a.size(); ++l) v[offset[l]] = ybar[l];
      return;
    }
    const double g0 = grouped(v);
    if (g0 <= r * r) return;
    RVector d2(a.size());
    double bound = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) {
      d2[l] = std::norm(v[offset[l]] - ybar[l]);
      bound += d2[l] / a[l];
    }
    auto f = [&](double lam) {
      double acc = 0.0;
      for (std::size_t l = 0; l < a.size(); ++l) {
        const double q = 1.0 + lam * a[l];
        acc += a[l] * d2[l] / (q * q);
      }
      return acc;
    };
    // f decreases from g0 > r^2 at 0; f(hi) <= r^2.
    double lo = 0.0;
    double hi = std::sqrt(bound) / r;
    double lam = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double fv = f(lam);
      if (std::abs(std::sqrt(fv) - r) <= 1e-14 * r) break;
      if (fv > r * r) lo = lam; else hi = lam;
      // Newton step on 1/sqrt(f) - 1/r, which is nearly linear in lam.
      double df = 0.0;
      for (std::size_t l = 0; l < a.size(); ++l) {
        const double q = 1.0 + lam * a[l];
        df -= 2.0 * a[l] * a[l] * d2[l] / (q * q * q);
      }
      const double phi = 1.0 / std::sqrt(fv) - 1.0 / r;
      const double dphi = -0.5 * df / (fv * std::sqrt(fv));
      double next = lam - phi / dphi;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (hi - lo <= 1e-15 * hi) break;
      lam = next;
    }
    if (f(lam) > r * r) {
      // Rounding left lam just short of the boundary; bisect toward hi.
      double a_lo = lam;
      for (int k = 0; k < 100 && hi - a_lo > 1e-16 * hi; ++k) {
        const double mid = 0.5 * (a_lo + hi);
        (f(mid) > r * r ? a_lo : hi) = mid;
      }
      lam = hi;
    }
    for (std::size_t l = 0; l < a.size(); ++l) {
      const cplx diff = v[offset[l]] - ybar[l];
      v[offset[l]] = ybar[l] + diff / (1.0 + lam * a[l]);
    }
  }
};

double l1(std::span<const cplx> s) {
  double acc = 0.0;
  for (const cplx& c : s) acc += std::abs(c);
  return acc;
}

void soft_threshold(const CVector& c, double t, bool real_only, CVector& s) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (real_only) {
      const double v = c[i].real();
      const double m = std::abs(v) - t;
      s[i] = m > 0.0 ? cplx(std::copysign(m, v), 0.0) : cplx{};
    } else {
      const double mag = std::abs(c[i]);
      s[i] = mag > t ? c[i] * ((mag - t) / mag) : cplx{};
    }
  }
}

// CGLS for min ||A x - b||, starting from x = 0. Returns iterations used;
// `ok` reports whether the normal-equation residual reached `tol`.
template <class Fwd, class Adj>
std::size_t cgls(Fwd&& fwd, Adj&& adj, const CVector& b, CVector& x, std::size_t max_it, double tol,
                 bool& ok) {
  CVector r = b;
  CVector s = adj(r);
  x.assign(s.size(), cplx{});
  const double s0 = norm2(s);
  ok = true;
  if (s0 == 0.0) return 0;
  CVector p = s;
  double gamma = s0 * s0;
  for (std::size_t it = 1; it <= max_it; ++it) {
    const CVector q = fwd(p);
    const double qq = norm2(q);
    if (qq == 0.0) return it;
    const double alpha = gamma / (qq * qq);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * p[i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
    s = adj(r);
    const double sn = norm2(s);
    if (sn <= tol * s0) return it;
    const double gamma_next = sn * sn;
    const double beta = gamma_next / gamma;
    gamma = gamma_next;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = s[i] + beta * p[i];
  }
  ok = false;
  return max_it;
}

}  // namespace

double weighted_residual(const MeasurementSet& ms, const SamplingPlan& plan, std::span<const cplx> x) {
  if (x.size() != ms.dims.n_hs()) throw DimensionError("weighted_residual: length mismatch");
  if (plan.weights.size() != ms.omega.size()) throw DimensionError("weighted_residual: weights");
  const CVector v = sensing_map(ms.dims).apply_adjoint(x);
  double acc = 0.0;
  for (std::size_t j = 0; j < ms.omega.size(); ++j) {
    const cplx r = ms.y[j] - v[storage_offset_of_flat(ms.omega[j], ms.dims)];
    acc += plan.weights[j] * plan.weights[j] * std::norm(r);
  }
  return std::sqrt(acc);
}

namespace {

void check_calibration(double sigma, std::size_t trials, double percentile) {
  if (trials < 10) throw ValidationError("calibrate_epsilon: trials must be >= 10");
  if (!(percentile > 0.0 && percentile < 1.0)) {
    throw ValidationError("calibrate_epsilon: percentile must lie in (0, 1)");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("calibrate_epsilon: sigma");
}

double weighted_noise_norm(double sigma, std::span<const double> weights, std::uint64_t seed) {
  Philox rng(seed);
  double acc = 0.0;
  for (double w : weights) {
    const double re = sigma * rng.normal();
    const double im = sigma * rng.normal();
    acc += w * w * (re * re + im * im);
  }
  return std::sqrt(acc);
}

double percentile_of(RVector v, double q) {
  std::sort(v.begin(), v.end());
  const double h = static_cast<double>(v.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

double calibrate_epsilon(double sigma, std::span<const double> pmf, std::size_t m, const Dims& dims,
                         std::size_t trials, double percentile, std::uint64_t seed) {
  check_calibration(sigma, trials, percentile);
  if (pmf.size() != dims.n_hs()) throw DimensionError("calibrate_epsilon: pmf length");
  if (sigma == 0.0) return 0.0;
  RVector norms(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const SamplingPlan plan = sample_omega(pmf, m, derive_seed(seed, kTagOmega, t));
    norms[t] = weighted_noise_norm(sigma, plan.weights, derive_seed(seed, kTagNoise, t));
  }
  return percentile_of(std::move(norms), percentile);
}

double calibrate_epsilon_fixed(double sigma, const SamplingPlan& plan, std::size_t trials,
                               double percentile, std::uint64_t seed) {
  check_calibration(sigma, trials, percentile);
  if (sigma == 0.0) return 0.0;
  RVector norms(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    norms[t] = weighted_noise_norm(sigma, plan.weights, derive_seed(seed, kTagNoise, t));
  }
  return percentile_of(std::move(norms), percentile);
}

RecoveryResult solve_bpdn(const MeasurementSet& ms, const SamplingPlan& plan, double epsilon,
                          const SolverConfig& cfg) {
  cfg.validate();
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("solve_bpdn: epsilon must be finite and >= 0");
  }
  check_plan(ms, plan);
  const Dims& dims = ms.dims;
  const std::size_t n = dims.n_hs();
  const Fidelity fid(ms, plan);
  const LinearMap psi = sparsity_map(dims);
  const LinearMap u_map = sensing_sparsity_map(dims);
  const double floor = 1e-12 * std::max(1.0, fid.dy_norm);

  RecoveryResult res;
  res.dims = dims;
  res.epsilon = epsilon;

  auto finish = [&](CVector s, std::size_t iterations, bool stopped) {
    res.x_hat = psi.apply(s);
    res.s_hat = std::move(s);
    res.residual_norm = weighted_residual(ms, plan, res.x_hat);
    res.l1_norm = l1(res.s_hat);
    res.iterations = iterations;
    res.converged =
        stopped && res.residual_norm <= epsilon * (1.0 + cfg.feasibility_tolerance) + floor;
    return res;
  };

  if (fid.dy_norm <= epsilon) return finish(CVector(n), 0, true);

  const double eff2 = epsilon * epsilon - fid.spread;
  const bool solvable = std::sqrt(fid.spread) <= epsilon + floor;
  const double r_eff = std::sqrt(std::max(0.0, eff2));

  CVector z(n);
  fid.project(z, r_eff);
  CVector u(n);
  CVector s(n);
  CVector w(n);
  CVector us = u_map.apply(s);
  const CVector c0 = u_map.apply_adjoint(z);
  double cmax = 0.0;
  for (const cplx& c : c0) cmax = std::max(cmax, std::abs(c));
  double rho = cmax > 0.0 ? 10.0 / cmax : 1.0;

  const double tol = cfg.objective_tolerance;
  bool stopped = false;
  std::size_t it = 0;
  for (it = 1; it <= cfg.max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) w[i] = z[i] - u[i];
    const CVector c = u_map.apply_adjoint(w);
    soft_threshold(c, 1.0 / rho, cfg.real_coefficients, s);
    us = u_map.apply(s);

    CVector z_old = z;
    for (std::size_t i = 0; i < n; ++i) w[i] = kRelax * us[i] + (1.0 - kRelax) * z_old[i];
    for (std::size_t i = 0; i < n; ++i) z[i] = w[i] + u[i];
    fid.project(z, r_eff);
    double rp = 0.0, rd = 0.0, nus = 0.0, nz = 0.0, nu = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += w[i] - z[i];
      rp += std::norm(us[i] - z[i]);
      rd += std::norm(z[i] - z_old[i]);
      nus += std::norm(us[i]);
      nz += std::norm(z[i]);
      nu += std::norm(u[i]);
    }
    rp = std::sqrt(rp);
    rd = rho * std::sqrt(rd);
    const double eps_pri = tol * std::max(std::sqrt(nus), std::sqrt(nz));
    const double eps_dual = tol * rho * std::sqrt(nu);

    if (cfg.record_trace) {
      res.trace.push_back({it, l1(s), fid.residual(us), rho});
    }
    if (cfg.verbosity > 1 && it % 100 == 0) {
      std::cerr << "bpdn it=" << it << " l1=" << l1(s) << " res=" << fid.residual(us)
                << " rp=" << rp << " rd=" << rd << " rho=" << rho << '\n';
    }
    if (rp <= eps_pri && rd <= eps_dual) {
      stopped = true;
      break;
    }
    if (it % 10 == 0) {
      // Balance the residuals relative to their own stopping thresholds.
      const double ratio = (rp / eps_pri) / (rd / std::max(eps_dual, 1e-300));
      if (ratio > 10.0) {
        rho *= 2.0;
        for (cplx& v : u) v *= 0.5;
      } else if (ratio < 0.1) {
        rho *= 0.5;
        for (cplx& v : u) v *= 2.0;
      }
    }
  }
  const std::size_t used = std::min(it, cfg.max_iterations);

  // Move the sparse iterate toward the feasible point z until the constraint
  // holds: grouped(us + t (z - us)) is quadratic in t.
  double qa = 0.0, qb = 0.0, qc = 0.0;
  for (std::size_t l = 0; l < fid.a.size(); ++l) {
    const std::size_t o = fid.offset[l];
    const cplx alpha = us[o] - fid.ybar[l];
    const cplx beta = z[o] - us[o];
    qa += fid.a[l] * std::norm(alpha);
    qb += fid.a[l] * (std::conj(alpha) * beta).real();
    qc += fid.a[l] * std::norm(beta);
  }
  const double target = r_eff * r_eff;
  double t = 0.0;
  if (qa > target) {
    if (qc <= 0.0) {
      t = 1.0;
    } else {
      const double disc = std::max(0.0, qb * qb - qc * (qa - target));
      t = std::clamp((-qb - std::sqrt(disc)) / qc, 0.0, 1.0);
    }
  }
  CVector s_out(n);
  if (t > 0.0) {
    const CVector sz = u_map.apply_adjoint(z);
    for (std::size_t i = 0; i < n; ++i) {
      s_out[i] = s[i] + t * (sz[i] - s[i]);
      if (cfg.real_coefficients) s_out[i] = s_out[i].real();
    }
  } else {
    s_out = s;
  }
  RecoveryResult best = finish(s_out, used, stopped && solvable);
  if (cfg.verbosity > 0) {
    std::cerr << "bpdn: it=" << used << " stopped=" << stopped << " t=" << t
              << " residual=" << best.residual_norm << " eps=" << epsilon << " floor=" << floor << '\n';
  }

  // Least squares on the support of the sparse iterate; kept only if it is
  // feasible and does not raise the l1 objective.
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < n; ++i) {
    if (s[i] != cplx{}) support.push_back(i);
  }
  if (solvable && !support.empty() && support.size() <= fid.a.size()) {
    auto fwd = [&](const CVector& v) {
      CVector full(n);
      for (std::size_t k = 0; k < support.size(); ++k) full[support[k]] = v[k];
      const CVector m = u_map.apply(full);
      CVector out(fid.a.size());
      for (std::size_t l = 0; l < fid.a.size(); ++l) out[l] = std::sqrt(fid.a[l]) * m[fid.offset[l]];
      return out;
    };
    auto adj = [&](const CVector& r) {
      CVector full(n);
      for (std::size_t l = 0; l < fid.a.size(); ++l) full[fid.offset[l]] = std::sqrt(fid.a[l]) * r[l];
      const CVector m = u_map.apply_adjoint(full);
      CVector out(support.size());
      for (std::size_t k = 0; k < support.size(); ++k) {
        out[k] = cfg.real_coefficients ? cplx(m[support[k]].real(), 0.0) : m[support[k]];
      }
      return out;
    };
    CVector b(fid.a.size());
    for (std::size_t l = 0; l < fid.a.size(); ++l) b[l] = std::sqrt(fid.a[l]) * fid.ybar[l];
    CVector coef;
    bool ok = false;
    cgls(fwd, adj, b, coef, 200, 1e-12, ok);
    CVector s_ls(n);
    for (std::size_t k = 0; k < support.size(); ++k) s_ls[support[k]] = coef[k];
    const double l1_ls = l1(s_ls);
    if (cfg.verbosity > 0) {
      std::cerr << "bpdn polish: support=" << support.size() << " labels=" << fid.a.size()
                << " cgls_ok=" << ok << " l1_ls=" << l1_ls << " l1=" << best.l1_norm << '\n';
    }
    if (l1_ls <= best.l1_norm * (1.0 + cfg.objective_tolerance)) {
      const CVector x_ls = psi.apply(s_ls);
      const double r_ls = weighted_residual(ms, plan, x_ls);
      if (r_ls <= epsilon * (1.0 + cfg.feasibility_tolerance) + floor) {
        best.x_hat = x_ls;
        best.s_hat = std::move(s_ls);
        best.residual_norm = r_ls;
        best.l1_norm = l1_ls;
        best.converged = stopped;
      }
    }
  }
  return best;
}

RecoveryResult solve_me(const MeasurementSet& ms, const SamplingPlan& plan, const SolverConfig& cfg) {
  cfg.validate();
  check_plan(ms, plan);
  const Dims& dims = ms.dims;
  const std::size_t n = dims.n_hs();
  const LinearMap phi = sensing_map(dims);
  std::vector<std::size_t> offsets(ms.omega.size());
  for (std::size_t j = 0; j < offsets.size(); ++j) offsets[j] = storage_offset_of_flat(ms.omega[j], dims);

  auto fwd = [&](const CVector& x) {
    const CVector v = phi.apply_adjoint(x);
    CVector out(offsets.size());
    for (std::size_t j = 0; j < offsets.size(); ++j) out[j] = v[offsets[j]];
    return out;
  };
  auto adj = [&](const CVector& r) {
    CVector full(n);
    for (std::size_t j = 0; j < offsets.size(); ++j) full[offsets[j]] += r[j];
    return phi.apply(full);
  };
  RecoveryResult res;
  res.dims = dims;
  bool ok = false;
  res.iterations = cgls(fwd, adj, ms.y, res.x_hat, cfg.max_iterations, 1e-12, ok);
  res.converged = ok;
  res.s_hat = sparsity_map(dims).apply_adjoint(res.x_hat);
  res.l1_norm = l1(res.s_hat);
  res.residual_norm = weighted_residual(ms, plan, res.x_hat);
  return res;
}

double rsnr(const HSVolume& x, const HSVolume& x_hat) {
  if (!(x.dims() == x_hat.dims())) throw DimensionError("rsnr: dims differ");
  const double ref = x.norm();
  if (ref == 0.0) throw ValidationError("rsnr: zero reference volume");
  double err = 0.0;
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    const double d = x.data()[i] - x_hat.data()[i];
    err += d * d;
  }
  if (std::sqrt(err) <= kPerfectRelativeError * ref) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ref * ref / err);
}

double snr_to_sigma(const HSVolume& x, double snr_db) {
  if (std::isnan(snr_db)) throw ValidationError("snr_to_sigma: NaN SNR");
  if (std::isinf(snr_db)) {
    if (snr_db < 0) throw ValidationError("snr_to_sigma: SNR of -inf");
    return 0.0;
  }
  const double ref = x.norm();
  if (ref == 0.0) throw ValidationError("snr_to_sigma: zero reference volume");
  return ref / std::sqrt(static_cast<double>(x.dims().n_hs()) * std::pow(10.0, snr_db / 10.0));
}

double sigma_k(std::span<const cplx> u, std::size_t k) {
  std::vector<std::size_t> order(u.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(u[a]) > std::abs(u[b]); });
  double tail = 0.0;
  for (std::size_t i = std::min(k, u.size()); i < order.size(); ++i) tail += std::abs(u[order[i]]);
  return tail;
}

void save_result(const RecoveryResult& r, const std::filesystem::path& stem) {
  write_complex_payload(std::filesystem::path(stem).concat(".bin"), r.x_hat);
  nlohmann::json j;
  j["format"] = "spfti-recovery";
  j["version"] = 1;
  j["n_xi"] = r.dims.n_xi();
  j["n_p_bar"] = r.dims.n_p_bar();
  j["residual_norm"] = io::format_double(r.residual_norm);
  j["l1_norm"] = io::format_double(r.l1_norm);
  j["epsilon"] = io::format_double(r.epsilon);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["payload"] = "x_hat, little-endian float64, interleaved re/im, storage order";
  auto os = io::open_output(std::filesystem::path(stem).concat(".json"));
  os << j.dump(1) << '\n';
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "iteration,objective,residual,rho\n";
  for (const TraceRow& t : trace) {
    os << t.iteration << ',' << io::format_double(t.objective) << ',' << io::format_double(t.residual)
       << ',' << io::format_double(t.rho) << '\n';
  }
}

}  // namespace spfti
