#include "sptcov/model.hpp"

#include <cmath>

namespace sptcov {

BandedTensor::BandedTensor(Index k1, Index k2, Bandwidth d) : k1_(k1), k2_(k2), d_(d.d) {
  if (k1 < 1 || k2 < 1) throw ShapeMismatch("BandedTensor needs k1, k2 >= 1");
  check_bandwidth(d, std::min(k1, k2));
  data_.assign(static_cast<std::size_t>(k1 * k2 * width() * width()), 0.0);
}

Matrix BandedTensor::apply(const Eigen::Ref<const Matrix>& x) const {
  if (x.rows() != k1_ || x.cols() != k2_) throw ShapeMismatch("BandedTensor::apply: grid mismatch");
  Matrix y = Matrix::Zero(k1_, k2_);
  for (Index i = 0; i < k1_; ++i)
    for (Index j = 0; j < k2_; ++j) {
      double acc = 0.0;
      for (Index p = -(d_ - 1); p < d_; ++p) {
        if (i + p < 0 || i + p >= k1_) continue;
        for (Index q = -(d_ - 1); q < d_; ++q) {
          if (j + q < 0 || j + q >= k2_) continue;
          acc += (*this)(i, j, p, q) * x(i + p, j + q);
        }
      }
      y(i, j) = acc;
    }
  return y;
}

Matrix BandedTensor::slice(Index p, Index q) const {
  Matrix out = Matrix::Zero(k1_, k2_);
  if (std::abs(p) >= d_ || std::abs(q) >= d_) return out;
  for (Index i = 0; i < k1_; ++i)
    for (Index j = 0; j < k2_; ++j)
      if (in_grid(i, j, p, q)) out(i, j) = (*this)(i, j, p, q);
  return out;
}

BandedTensor BandedTensor::from_dense(const CovTensor4& t, Bandwidth d) {
  BandedTensor b(t.k1(), t.k2(), d);
  for (Index i = 0; i < t.k1(); ++i)
    for (Index j = 0; j < t.k2(); ++j)
      for (Index p = -(d.d - 1); p < d.d; ++p)
        for (Index q = -(d.d - 1); q < d.d; ++q)
          if (b.in_grid(i, j, p, q)) b(i, j, p, q) = t(i, j, i + p, j + q);
  return b;
}

CovTensor4 BandedTensor::to_dense(Index cap) const {
  CovTensor4 t(k1_, k2_, cap);
  for (Index i = 0; i < k1_; ++i)
    for (Index j = 0; j < k2_; ++j)
      for (Index p = -(d_ - 1); p < d_; ++p)
        for (Index q = -(d_ - 1); q < d_; ++q)
          if (in_grid(i, j, p, q)) t(i, j, i + p, j + q) = (*this)(i, j, p, q);
  return t;
}

BandedTensor BandedTensor::from_symbol(const StationarySymbol& sym, Bandwidth d) {
  BandedTensor b(sym.k1(), sym.k2(), d);
  for (Index i = 0; i < sym.k1(); ++i)
    for (Index j = 0; j < sym.k2(); ++j)
      for (Index p = -(d.d - 1); p < d.d; ++p)
        for (Index q = -(d.d - 1); q < d.d; ++q)
          if (b.in_grid(i, j, p, q)) b(i, j, p, q) = sym(p, q);
  return b;
}

BandedTensor BandedTensor::scaled(double c) const {
  BandedTensor out = *this;
  for (double& v : out.data_) v *= c;
  return out;
}

BandedKind SepPlusBandedCov::kind() const {
  if (symbol()) return BandedKind::stationary;
  if (banded_tensor()) return BandedKind::banded;
  return BandedKind::none;
}

SepPlusBandedCov SepPlusBandedCov::canonical() const {
  SepPlusBandedCov out = *this;
  const double n1 = a1.fro_norm();
  if (n1 > 0.0) {
    out.a1 = a1.scaled(1.0 / n1);
    out.a2 = a2.scaled(n1);
    out.a2_trace_normalized = false;
  }
  return out;
}

CovTensor4 SepPlusBandedCov::to_dense(Index cap) const {
  CovTensor4 t(k1(), k2(), cap);
  for (Index i = 0; i < k1(); ++i)
    for (Index j = 0; j < k2(); ++j)
      for (Index k = 0; k < k1(); ++k)
        for (Index l = 0; l < k2(); ++l) t(i, j, k, l) = a1(i, k) * a2(j, l);
  if (const auto* s = symbol()) t += stationary_tensor(*s, cap);
  if (const auto* b = banded_tensor()) t += b->to_dense(cap);
  return t;
}

}  // namespace sptcov
