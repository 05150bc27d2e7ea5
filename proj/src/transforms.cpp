#include "spfti/transforms.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "spfti/errors.hpp"

namespace spfti {

namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

void require_pow2(const char* who, std::size_t n) {
  if (n == 0 || !is_power_of_two(n)) {
    throw DimensionError(std::string(who) + ": length " + std::to_string(n) +
                         " is not a power of two");
  }
}

// Plans are created once per (length, sign) under a lock and never destroyed;
// fftw_execute_dft on a finished plan is thread-safe.
class PlanCache {
 public:
  static fftw_plan get(std::size_t n, int sign) {
    static PlanCache cache;
    std::lock_guard lock(cache.mutex_);
    auto key = std::make_pair(n, sign);
    auto it = cache.plans_.find(key);
    if (it != cache.plans_.end()) return it->second;
    CVector scratch_in(n), scratch_out(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n),
                                   reinterpret_cast<fftw_complex*>(scratch_in.data()),
                                   reinterpret_cast<fftw_complex*>(scratch_out.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

void dft_kernel(std::span<const cplx> in, std::span<cplx> out, bool adjoint) {
  const std::size_t n = in.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  // Row r (0-based) of the analysis matrix carries frequency r + 1 - n/2,
  // i.e. FFT bin (r + 1 - n/2) mod n.
  const std::size_t shift = (n + 1 - n / 2) % n;
  CVector buf(n);
  if (!adjoint) {
    fftw_execute_dft(PlanCache::get(n, FFTW_FORWARD),
                     reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(buf.data()));
    for (std::size_t r = 0; r < n; ++r) out[r] = buf[(r + shift) % n] * scale;
  } else {
    CVector spec(n);
    for (std::size_t r = 0; r < n; ++r) spec[(r + shift) % n] = in[r];
    fftw_execute_dft(PlanCache::get(n, FFTW_BACKWARD),
                     reinterpret_cast<fftw_complex*>(spec.data()),
                     reinterpret_cast<fftw_complex*>(buf.data()));
    for (std::size_t k = 0; k < n; ++k) out[k] = buf[k] * scale;
  }
}

std::size_t bit_reverse(std::size_t v, int bits) {
  std::size_t r = 0;
  for (int b = 0; b < bits; ++b) {
    r = (r << 1) | (v & 1U);
    v >>= 1;
  }
  return r;
}

// H_n(i, j) = (-1)^{sum_k i_k j_{m-1-k}} / sqrt(n): a Sylvester transform of
// the bit-reversed input.
void paley_kernel(std::span<const cplx> in, std::span<cplx> out) {
  const std::size_t n = in.size();
  const int bits = ilog2(n);
  for (std::size_t j = 0; j < n; ++j) out[bit_reverse(j, bits)] = in[j];
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const cplx a = out[j];
        const cplx b = out[j + h];
        out[j] = a + b;
        out[j + h] = a - b;
      }
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : out) v *= scale;
}

void haar_synthesis(std::span<const cplx> in, std::span<cplx> out) {
  const std::size_t n = in.size();
  CVector coarse{in[0]};
  CVector finer;
  for (std::size_t m = 2; m <= n; m <<= 1) {
    finer.assign(m, cplx{});
    for (std::size_t a = 0; a < m / 2; ++a) {
      const cplx d = in[m / 2 + a];
      finer[2 * a] = (coarse[a] + d) * kInvSqrt2;
      finer[2 * a + 1] = (coarse[a] - d) * kInvSqrt2;
    }
    coarse.swap(finer);
  }
  std::copy(coarse.begin(), coarse.end(), out.begin());
}

void haar_analysis(std::span<const cplx> in, std::span<cplx> out) {
  const std::size_t n = in.size();
  CVector fine(in.begin(), in.end());
  for (std::size_t m = n; m >= 2; m >>= 1) {
    for (std::size_t a = 0; a < m / 2; ++a) {
      const cplx s = (fine[2 * a] + fine[2 * a + 1]) * kInvSqrt2;
      const cplx d = (fine[2 * a] - fine[2 * a + 1]) * kInvSqrt2;
      out[m / 2 + a] = d;
      fine[a] = s;
    }
  }
  out[0] = fine[0];
}

void haar0_synthesis(std::span<const cplx> in, std::span<cplx> out) {
  const std::size_t n = in.size();
  CVector coarse{in[0]};
  CVector finer;
  for (std::size_t m = 2; m <= n; m <<= 1) {
    finer.assign(m, cplx{});
    for (std::size_t a = 0; a < m / 2; ++a) {
      const cplx v = (coarse[a] + in[m / 2 + a]) * kInvSqrt2;
      finer[2 * a] = v;
      finer[2 * a + 1] = v;
    }
    coarse.swap(finer);
  }
  std::copy(coarse.begin(), coarse.end(), out.begin());
}

std::size_t grid_side(std::size_t n_p) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n_p))));
  if (side * side != n_p || !is_power_of_two(side)) {
    throw DimensionError("idhw: length " + std::to_string(n_p) +
                         " is not the square of a power of two");
  }
  return side;
}

// Pyramid synthesis: level l merges the (scaling, scaling) grid of side n with
// three detail blocks into the scaling grid of side 2n.
void idhw_synthesis(std::span<const cplx> in, std::span<cplx> out) {
  const std::size_t side = grid_side(in.size());
  CVector ll{in[0]};
  for (std::size_t n = 1; n < side; n <<= 1) {
    const std::size_t off = n * n;
    const cplx* b1 = in.data() + off;          // scaling y, detail x
    const cplx* b2 = in.data() + 2 * off;      // detail y, scaling x
    const cplx* b3 = in.data() + 3 * off;      // detail y, detail x
    const std::size_t w = 2 * n;
    CVector lo(n * w), hi(n * w);
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t k = y * n + b;
        lo[y * w + 2 * b] = (ll[k] + b1[k]) * kInvSqrt2;
        lo[y * w + 2 * b + 1] = (ll[k] - b1[k]) * kInvSqrt2;
        hi[y * w + 2 * b] = (b2[k] + b3[k]) * kInvSqrt2;
        hi[y * w + 2 * b + 1] = (b2[k] - b3[k]) * kInvSqrt2;
      }
    }
    CVector next(w * w);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t x = 0; x < w; ++x) {
        next[(2 * a) * w + x] = (lo[a * w + x] + hi[a * w + x]) * kInvSqrt2;
        next[(2 * a + 1) * w + x] = (lo[a * w + x] - hi[a * w + x]) * kInvSqrt2;
      }
    }
    ll.swap(next);
  }
  std::copy(ll.begin(), ll.end(), out.begin());
}

void idhw_analysis(std::span<const cplx> in, std::span<cplx> out) {
  const std::size_t side = grid_side(in.size());
  CVector ll(in.begin(), in.end());
  for (std::size_t n = side / 2; n >= 1; n >>= 1) {
    const std::size_t w = 2 * n;
    CVector lo(n * w), hi(n * w);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t x = 0; x < w; ++x) {
        const cplx top = ll[(2 * a) * w + x];
        const cplx bottom = ll[(2 * a + 1) * w + x];
        lo[a * w + x] = (top + bottom) * kInvSqrt2;
        hi[a * w + x] = (top - bottom) * kInvSqrt2;
      }
    }
    const std::size_t off = n * n;
    CVector coarse(n * n);
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t k = y * n + b;
        const cplx l0 = lo[y * w + 2 * b], l1 = lo[y * w + 2 * b + 1];
        const cplx h0 = hi[y * w + 2 * b], h1 = hi[y * w + 2 * b + 1];
        coarse[k] = (l0 + l1) * kInvSqrt2;
        out[off + k] = (l0 - l1) * kInvSqrt2;
        out[2 * off + k] = (h0 + h1) * kInvSqrt2;
        out[3 * off + k] = (h0 - h1) * kInvSqrt2;
      }
    }
    ll.swap(coarse);
  }
  out[0] = ll[0];
}

}  // namespace

CVector dft_apply(std::span<const cplx> u, bool adjoint) {
  require_pow2("dft_apply", u.size());
  CVector out(u.size());
  dft_kernel(u, out, adjoint);
  return out;
}

CVector fwht_paley(std::span<const cplx> u, bool /*adjoint*/) {
  require_pow2("fwht_paley", u.size());
  CVector out(u.size());
  paley_kernel(u, out);
  return out;
}

CVector dhw_apply(std::span<const cplx> u, bool adjoint) {
  require_pow2("dhw_apply", u.size());
  CVector out(u.size());
  adjoint ? haar_analysis(u, out) : haar_synthesis(u, out);
  return out;
}

CVector dhw0_apply(std::span<const cplx> u) {
  require_pow2("dhw0_apply", u.size());
  CVector out(u.size());
  haar0_synthesis(u, out);
  return out;
}

CVector idhw_apply(std::span<const cplx> u, bool adjoint) {
  CVector out(u.size());
  adjoint ? idhw_analysis(u, out) : idhw_synthesis(u, out);
  return out;
}

LinearMap dft_map(std::size_t n_xi) {
  require_pow2("dft_map", n_xi);
  return LinearMap(
      "Phi_dft", n_xi, n_xi, Field::Complex,
      [](std::span<const cplx> in, std::span<cplx> out) { dft_kernel(in, out, true); },
      [](std::span<const cplx> in, std::span<cplx> out) { dft_kernel(in, out, false); });
}

LinearMap hadamard_map(std::size_t n_p) {
  require_pow2("hadamard_map", n_p);
  return LinearMap("Phi_had", n_p, n_p, Field::Real, paley_kernel, paley_kernel);
}

LinearMap dhw_map(std::size_t n) {
  require_pow2("dhw_map", n);
  return LinearMap("Psi_dhw", n, n, Field::Real, haar_synthesis, haar_analysis);
}

LinearMap idhw_map(std::size_t n_p_bar) {
  require_pow2("idhw_map", n_p_bar);
  const std::size_t n_p = n_p_bar * n_p_bar;
  return LinearMap("Psi_idhw", n_p, n_p, Field::Real, idhw_synthesis, idhw_analysis);
}

LinearMap sensing_map(const Dims& dims) {
  return kron(hadamard_map(dims.n_p()), dft_map(dims.n_xi()));
}

LinearMap sparsity_map(const Dims& dims) {
  return kron(idhw_map(dims.n_p_bar()), dhw_map(dims.n_xi()));
}

LinearMap sensing_sparsity_map(const Dims& dims) {
  return compose(sensing_map(dims).adjoint(), sparsity_map(dims));
}

}  // namespace spfti
