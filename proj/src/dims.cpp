#include "spfti/dims.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "spfti/errors.hpp"

namespace spfti {

bool is_power_of_two(std::size_t n) { return std::has_single_bit(n); }

int ilog2(std::size_t n) { return std::bit_width(n) - 1; }

Dims::Dims(std::size_t n_xi, std::size_t n_p_bar) : n_xi_(n_xi), n_p_bar_(n_p_bar) {
  if (n_xi < 2 || !is_power_of_two(n_xi)) {
    throw DimensionError("n_xi must be a power of two >= 2, got " + std::to_string(n_xi));
  }
  if (n_p_bar < 2 || !is_power_of_two(n_p_bar)) {
    throw DimensionError("n_p_bar must be a power of two >= 2, got " + std::to_string(n_p_bar));
  }
}

namespace {

void check_component(const char* name, std::size_t v, std::size_t hi) {
  if (v < 1 || v > hi) {
    throw RangeError(std::string(name) + "=" + std::to_string(v) + " outside [1, " +
                     std::to_string(hi) + "]");
  }
}

}  // namespace

std::size_t pattern_index(std::size_t l_x, std::size_t l_y, const Dims& dims) {
  check_component("l_x", l_x, dims.n_p_bar());
  check_component("l_y", l_y, dims.n_p_bar());
  return dims.n_p_bar() * (l_y - 1) + l_x;
}

std::size_t flat_index(const Index3D& idx, const Dims& dims) {
  check_component("l_xi", idx.l_xi, dims.n_xi());
  return dims.n_p() * (idx.l_xi - 1) + pattern_index(idx.l_x, idx.l_y, dims);
}

Index3D unflatten(std::size_t l, const Dims& dims) {
  check_component("l", l, dims.n_hs());
  const std::size_t z = l - 1;
  const std::size_t lp0 = z % dims.n_p();
  return Index3D{z / dims.n_p() + 1, lp0 % dims.n_p_bar() + 1, lp0 / dims.n_p_bar() + 1};
}

std::size_t storage_offset(const Index3D& idx, const Dims& dims) {
  check_component("l_xi", idx.l_xi, dims.n_xi());
  const std::size_t lp = pattern_index(idx.l_x, idx.l_y, dims);
  return dims.n_xi() * (lp - 1) + (idx.l_xi - 1);
}

std::size_t storage_offset_of_flat(std::size_t l, const Dims& dims) {
  check_component("l", l, dims.n_hs());
  const std::size_t z = l - 1;
  return dims.n_xi() * (z % dims.n_p()) + z / dims.n_p();
}

HSVolume::HSVolume(Dims dims, RVector data) : dims_(dims), data_(std::move(data)) {
  if (data_.size() != dims_.n_hs()) {
    throw DimensionError("volume payload has " + std::to_string(data_.size()) +
                         " entries, expected " + std::to_string(dims_.n_hs()));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw ValidationError("volume contains a non-finite entry");
  }
}

HSVolume HSVolume::zeros(Dims dims) { return HSVolume(dims, RVector(dims.n_hs(), 0.0)); }

double& HSVolume::at(std::size_t l_nu, std::size_t l_p) {
  check_component("l_nu", l_nu, dims_.n_xi());
  check_component("l_p", l_p, dims_.n_p());
  return data_[(l_p - 1) * dims_.n_xi() + (l_nu - 1)];
}

double HSVolume::at(std::size_t l_nu, std::size_t l_p) const {
  check_component("l_nu", l_nu, dims_.n_xi());
  check_component("l_p", l_p, dims_.n_p());
  return data_[(l_p - 1) * dims_.n_xi() + (l_nu - 1)];
}

CVector HSVolume::to_complex() const { return CVector(data_.begin(), data_.end()); }

double HSVolume::norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

}  // namespace spfti
