#include "spfti/linear_map.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "spfti/errors.hpp"

namespace spfti {

namespace {

void check_len(const std::string& name, const char* what, std::size_t got, std::size_t want) {
  if (got != want) {
    throw DimensionError(name + ": " + what + " length " + std::to_string(got) + ", expected " +
                         std::to_string(want));
  }
}

}  // namespace

LinearMap::LinearMap(std::string name, std::size_t rows, std::size_t cols, Field field,
                     Kernel forward, Kernel adjoint)
    : name_(std::move(name)),
      rows_(rows),
      cols_(cols),
      field_(field),
      forward_(std::move(forward)),
      adjoint_(std::move(adjoint)) {}

void LinearMap::apply_into(std::span<const cplx> u, std::span<cplx> out) const {
  check_len(name_, "input", u.size(), cols_);
  check_len(name_, "output", out.size(), rows_);
  forward_(u, out);
}

void LinearMap::apply_adjoint_into(std::span<const cplx> v, std::span<cplx> out) const {
  check_len(name_, "adjoint input", v.size(), rows_);
  check_len(name_, "adjoint output", out.size(), cols_);
  adjoint_(v, out);
}

CVector LinearMap::apply(std::span<const cplx> u) const {
  CVector out(rows_);
  apply_into(u, out);
  return out;
}

CVector LinearMap::apply_adjoint(std::span<const cplx> v) const {
  CVector out(cols_);
  apply_adjoint_into(v, out);
  return out;
}

LinearMap LinearMap::adjoint() const {
  return LinearMap(name_ + "*", cols_, rows_, field_, adjoint_, forward_);
}

LinearMap identity_map(std::size_t n) {
  auto copy = [](std::span<const cplx> in, std::span<cplx> out) {
    std::copy(in.begin(), in.end(), out.begin());
  };
  return LinearMap("I" + std::to_string(n), n, n, Field::Real, copy, copy);
}

LinearMap compose(const LinearMap& a, const LinearMap& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("compose: " + a.name() + " has " + std::to_string(a.cols()) +
                         " columns but " + b.name() + " has " + std::to_string(b.rows()) +
                         " rows");
  }
  const Field field =
      (a.field() == Field::Complex || b.field() == Field::Complex) ? Field::Complex : Field::Real;
  auto fwd = [a, b](std::span<const cplx> in, std::span<cplx> out) {
    CVector mid(b.rows());
    b.apply_into(in, mid);
    a.apply_into(mid, out);
  };
  auto adj = [a, b](std::span<const cplx> in, std::span<cplx> out) {
    CVector mid(a.cols());
    a.apply_adjoint_into(in, mid);
    b.apply_adjoint_into(mid, out);
  };
  return LinearMap(a.name() + "." + b.name(), a.rows(), b.cols(), field, fwd, adj);
}

namespace {

// out = (A (x) B) u, or the adjoint when `adjoint` is set.
void kron_kernel(const LinearMap& a, const LinearMap& b, std::span<const cplx> u,
                 std::span<cplx> out, bool adjoint) {
  const std::size_t a_in = adjoint ? a.rows() : a.cols();
  const std::size_t a_out = adjoint ? a.cols() : a.rows();
  const std::size_t b_in = adjoint ? b.rows() : b.cols();
  const std::size_t b_out = adjoint ? b.cols() : b.rows();

  // Apply B along each contiguous segment.
  CVector stage(b_out * a_in);
  for (std::size_t k = 0; k < a_in; ++k) {
    auto src = u.subspan(k * b_in, b_in);
    auto dst = std::span<cplx>(stage).subspan(k * b_out, b_out);
    adjoint ? b.apply_adjoint_into(src, dst) : b.apply_into(src, dst);
  }
  // Apply A across the strided axis.
  CVector gather(a_in);
  CVector scatter(a_out);
  for (std::size_t i = 0; i < b_out; ++i) {
    for (std::size_t k = 0; k < a_in; ++k) gather[k] = stage[k * b_out + i];
    adjoint ? a.apply_adjoint_into(gather, scatter) : a.apply_into(gather, scatter);
    for (std::size_t k = 0; k < a_out; ++k) out[k * b_out + i] = scatter[k];
  }
}

}  // namespace

LinearMap kron(const LinearMap& a, const LinearMap& b) {
  const Field field =
      (a.field() == Field::Complex || b.field() == Field::Complex) ? Field::Complex : Field::Real;
  auto fwd = [a, b](std::span<const cplx> in, std::span<cplx> out) {
    kron_kernel(a, b, in, out, false);
  };
  auto adj = [a, b](std::span<const cplx> in, std::span<cplx> out) {
    kron_kernel(a, b, in, out, true);
  };
  return LinearMap("(" + a.name() + " x " + b.name() + ")", a.rows() * b.rows(),
                   a.cols() * b.cols(), field, fwd, adj);
}

CVector kron_apply(const LinearMap& a, const LinearMap& b, std::span<const cplx> u, bool adjoint) {
  const std::size_t want = adjoint ? a.rows() * b.rows() : a.cols() * b.cols();
  check_len("kron_apply", "input", u.size(), want);
  CVector out(adjoint ? a.cols() * b.cols() : a.rows() * b.rows());
  kron_kernel(a, b, u, out, adjoint);
  return out;
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::adjoint() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = std::conj((*this)(i, j));
  return t;
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix& rhs) const {
  if (cols_ != rhs.rows_) throw DimensionError("dense product: inner dimensions differ");
  DenseMatrix out(rows_, rhs.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < cols_; ++k) {
      const cplx aik = (*this)(i, k);
      if (aik == cplx{}) continue;
      const double ar = aik.real(), ai = aik.imag();
      cplx* orow = &out(i, 0);
      const cplx* brow = rhs.data_.data() + k * rhs.cols_;
      // Written out to avoid the NaN-recovery path of std::complex multiply.
      for (std::size_t j = 0; j < rhs.cols_; ++j) {
        const double br = brow[j].real(), bi = brow[j].imag();
        orow[j] += cplx(ar * br - ai * bi, ar * bi + ai * br);
      }
    }
  }
  return out;
}

CVector DenseMatrix::operator*(std::span<const cplx> v) const {
  if (v.size() != cols_) throw DimensionError("dense mat-vec: length mismatch");
  CVector out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    cplx acc{};
    for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

double DenseMatrix::max_abs_diff(const DenseMatrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw DimensionError("max_abs_diff: shapes differ");
  }
  double m = 0.0;
  for (std::size_t k = 0; k < data_.size(); ++k) m = std::max(m, std::abs(data_[k] - other.data_[k]));
  return m;
}

double DenseMatrix::row_max_abs(std::size_t i) const {
  double m = 0.0;
  for (std::size_t j = 0; j < cols_; ++j) m = std::max(m, std::abs((*this)(i, j)));
  return m;
}

void DenseMatrix::write_csv(std::ostream& os) const {
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      const cplx v = (*this)(i, j);
      if (j) os << ',';
      os << v.real();
      if (v.imag() != 0.0) os << (v.imag() < 0 ? "" : "+") << v.imag() << 'j';
    }
    os << '\n';
  }
  os.precision(old);
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

DenseMatrix densify(const LinearMap& map, std::size_t cap) {
  if (map.rows() * map.cols() > cap) {
    throw SizeError("densify: " + map.name() + " has " + std::to_string(map.rows() * map.cols()) +
                    " entries, cap is " + std::to_string(cap));
  }
  DenseMatrix m(map.rows(), map.cols());
  CVector e(map.cols());
  CVector col(map.rows());
  for (std::size_t j = 0; j < map.cols(); ++j) {
    e[j] = 1.0;
    map.apply_into(e, col);
    for (std::size_t i = 0; i < map.rows(); ++i) m(i, j) = col[i];
    e[j] = 0.0;
  }
  return m;
}

cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw DimensionError("inner: length mismatch");
  cplx acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

double norm2(std::span<const cplx> a) {
  double s = 0.0;
  for (const cplx& v : a) s += std::norm(v);
  return std::sqrt(s);
}

}  // namespace spfti
