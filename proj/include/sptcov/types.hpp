#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sptcov/errors.hpp"

namespace sptcov {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstSampleView = Eigen::Map<const RowMatrix>;

/// Discrete bandwidth: the number of lags a banded component may occupy.
/// A component banded by d vanishes whenever max(|i-k|, |j-l|) >= d.
struct Bandwidth {
  Index d = 0;

  constexpr Bandwidth() = default;
  constexpr explicit Bandwidth(Index lags) : d(lags) {}

  /// d = ceil(delta * k) + 1 for a continuous bandwidth delta in [0, 1).
  static Bandwidth from_fraction(double delta, Index k) {
    return Bandwidth{static_cast<Index>(std::ceil(delta * static_cast<double>(k))) + 1};
  }

  friend constexpr bool operator==(Bandwidth, Bandwidth) = default;
  friend constexpr auto operator<=>(Bandwidth, Bandwidth) = default;
};

/// Throws BandwidthOutOfRange unless 0 <= d <= max_d.
void check_bandwidth(Bandwidth d, Index max_d);

/// Symmetric real matrix. The constructor symmetrizes its argument, so the
/// invariant holds by construction rather than by validation.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);
  static SymMatrix identity(Index k) { return SymMatrix(Matrix::Identity(k, k)); }
  static SymMatrix zero(Index k) { return SymMatrix(Matrix::Zero(k, k)); }

  Index size() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index k) const { return m_(i, k); }
  double trace() const { return m_.trace(); }
  double fro_norm() const { return m_.norm(); }

  SymMatrix scaled(double c) const;
  friend SymMatrix operator*(double c, const SymMatrix& a) { return a.scaled(c); }

 private:
  Matrix m_;
};

/// (m + m^T) / 2.
SymMatrix symmetrize(const Matrix& m);

/// N replicated K1 x K2 surfaces, stored sample-major, row-major within a sample.
class SampleStack {
 public:
  SampleStack() = default;
  SampleStack(Index n, Index k1, Index k2, std::vector<double> data, bool centered = false);
  SampleStack(const std::vector<Matrix>& samples, bool centered = false);

  Index n() const { return n_; }
  Index k1() const { return k1_; }
  Index k2() const { return k2_; }
  bool centered() const { return centered_; }
  std::span<const double> data() const { return data_; }

  ConstSampleView sample(Index n) const {
    return ConstSampleView(data_.data() + n * k1_ * k2_, k1_, k2_);
  }

  /// Per-cell sample mean surface.
  Matrix mean() const;
  /// Copy with the per-cell mean subtracted and the centered flag set.
  SampleStack centered_copy() const;
  /// Samples at the given indices (repetitions allowed), in that order.
  SampleStack subset(std::span<const Index> indices) const;
  /// Concatenation of two stacks on the same grid.
  static SampleStack concat(const SampleStack& a, const SampleStack& b);

 private:
  Index n_ = 0;
  Index k1_ = 0;
  Index k2_ = 0;
  std::vector<double> data_;
  bool centered_ = false;
};

/// Dense K1 x K2 x K1 x K2 tensor. Only for small grids: construction is
/// refused above `cap` total grid points (K1*K2).
class CovTensor4 {
 public:
  static constexpr Index kDefaultCap = 256;

  CovTensor4() = default;
  CovTensor4(Index k1, Index k2, Index cap = kDefaultCap);

  Index k1() const { return k1_; }
  Index k2() const { return k2_; }

  double& operator()(Index i, Index j, Index k, Index l) { return data_[offset(i, j, k, l)]; }
  double operator()(Index i, Index j, Index k, Index l) const { return data_[offset(i, j, k, l)]; }

  /// Row-major K1K2 x K1K2 matricization: row (i,j), column (k,l).
  Eigen::Map<const RowMatrix> matricized() const {
    return Eigen::Map<const RowMatrix>(data_.data(), k1_ * k2_, k1_ * k2_);
  }
  Eigen::Map<RowMatrix> matricized() {
    return Eigen::Map<RowMatrix>(data_.data(), k1_ * k2_, k1_ * k2_);
  }

  double fro_norm() const;
  bool is_symmetric(double tol = 1e-12) const;

  CovTensor4& operator+=(const CovTensor4& other);
  CovTensor4& operator-=(const CovTensor4& other);
  CovTensor4& operator*=(double c);

 private:
  std::size_t offset(Index i, Index j, Index k, Index l) const {
    return static_cast<std::size_t>(((i * k2_ + j) * k1_ + k) * k2_ + l);
  }

  Index k1_ = 0;
  Index k2_ = 0;
  std::vector<double> data_;
};

}  // namespace sptcov
