#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "sptcov/stationary.hpp"
#include "sptcov/types.hpp"

namespace sptcov {

/// Non-stationary banded 4-index operator stored by lag offsets:
/// entry (i, j, p, q) is B[i, j, i+p, j+q] for |p|, |q| < d. Offsets that
/// leave the grid are stored as zeros.
class BandedTensor {
 public:
  BandedTensor() = default;
  BandedTensor(Index k1, Index k2, Bandwidth d);

  Index k1() const { return k1_; }
  Index k2() const { return k2_; }
  Bandwidth band() const { return Bandwidth{d_}; }
  /// Offsets per axis, 2d - 1 (0 when d = 0).
  Index width() const { return d_ > 0 ? 2 * d_ - 1 : 0; }

  double operator()(Index i, Index j, Index p, Index q) const { return data_[offset(i, j, p, q)]; }
  double& operator()(Index i, Index j, Index p, Index q) { return data_[offset(i, j, p, q)]; }
  bool in_grid(Index i, Index j, Index p, Index q) const {
    return i + p >= 0 && i + p < k1_ && j + q >= 0 && j + q < k2_;
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  /// y[i,j] = sum_{p,q} b(i,j,p,q) x[i+p, j+q], O(K^2 d^2).
  Matrix apply(const Eigen::Ref<const Matrix>& x) const;

  /// Lag-(p,q) slice as a matrix over (i, j); rows/cols outside the grid are zero.
  Matrix slice(Index p, Index q) const;

  /// Banded restriction of a dense tensor (oracle scale).
  static BandedTensor from_dense(const CovTensor4& t, Bandwidth d);
  CovTensor4 to_dense(Index cap = CovTensor4::kDefaultCap) const;

  /// Stationary symbol viewed as a banded tensor with the given band.
  static BandedTensor from_symbol(const StationarySymbol& sym, Bandwidth d);

  BandedTensor scaled(double c) const;

 private:
  std::size_t offset(Index i, Index j, Index p, Index q) const {
    const Index w = width();
    return static_cast<std::size_t>((i * k2_ + j) * w * w + (p + d_ - 1) * w + (q + d_ - 1));
  }

  Index k1_ = 0;
  Index k2_ = 0;
  Index d_ = 0;
  std::vector<double> data_;
};

enum class BandedKind { none, stationary, banded };

/// Separable-plus-banded covariance a1 (x) a2 + B.
struct SepPlusBandedCov {
  SymMatrix a1;
  SymMatrix a2;
  std::variant<std::monostate, StationarySymbol, BandedTensor> banded;
  Bandwidth d;
  /// a2 carries the 1 / (shifted trace) normalization; only a1 (x) a2 is identified.
  bool a2_trace_normalized = true;

  Index k1() const { return a1.size(); }
  Index k2() const { return a2.size(); }
  BandedKind kind() const;
  const StationarySymbol* symbol() const { return std::get_if<StationarySymbol>(&banded); }
  const BandedTensor* banded_tensor() const { return std::get_if<BandedTensor>(&banded); }

  /// Same operator with factors rescaled so that ||a1||_F = 1.
  SepPlusBandedCov canonical() const;
  /// Dense tensor (oracle scale).
  CovTensor4 to_dense(Index cap = CovTensor4::kDefaultCap) const;
};

}  // namespace sptcov
