#include "sptcov/types.hpp"

#include <omp.h>

#include <algorithm>
#include <string>

#include "sptcov/parallel.hpp"

namespace sptcov {

void check_bandwidth(Bandwidth d, Index max_d) {
  if (d.d < 0 || d.d > max_d) throw BandwidthOutOfRange(static_cast<long>(d.d), static_cast<long>(max_d));
}

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeMismatch("SymMatrix needs a square matrix");
  if (!m.allFinite()) throw Error("SymMatrix: non-finite entry");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::scaled(double c) const {
  SymMatrix out;
  out.m_ = c * m_;
  return out;
}

SymMatrix symmetrize(const Matrix& m) { return SymMatrix(m); }

SampleStack::SampleStack(Index n, Index k1, Index k2, std::vector<double> data, bool centered)
    : n_(n), k1_(k1), k2_(k2), data_(std::move(data)), centered_(centered) {
  if (n < 1 || k1 < 1 || k2 < 1) throw ShapeMismatch("SampleStack needs n, k1, k2 >= 1");
  if (static_cast<Index>(data_.size()) != n * k1 * k2)
    throw ShapeMismatch("SampleStack payload has " + std::to_string(data_.size()) +
                        " values, expected " + std::to_string(n * k1 * k2));
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); }))
    throw Error("SampleStack: non-finite entry");
}

SampleStack::SampleStack(const std::vector<Matrix>& samples, bool centered) : centered_(centered) {
  if (samples.empty()) throw ShapeMismatch("SampleStack needs at least one sample");
  n_ = static_cast<Index>(samples.size());
  k1_ = samples.front().rows();
  k2_ = samples.front().cols();
  if (k1_ < 1 || k2_ < 1) throw ShapeMismatch("SampleStack needs k1, k2 >= 1");
  data_.resize(static_cast<std::size_t>(n_ * k1_ * k2_));
  for (Index s = 0; s < n_; ++s) {
    const Matrix& x = samples[static_cast<std::size_t>(s)];
    if (x.rows() != k1_ || x.cols() != k2_) throw ShapeMismatch("samples have different shapes");
    if (!x.allFinite()) throw Error("SampleStack: non-finite entry");
    Eigen::Map<RowMatrix>(data_.data() + s * k1_ * k2_, k1_, k2_) = x;
  }
}

Matrix SampleStack::mean() const {
  Matrix sum = ordered_sum(n_, Matrix(Matrix::Zero(k1_, k2_)),
                           [&](Index s) -> Matrix { return sample(s); });
  return sum / static_cast<double>(n_);
}

SampleStack SampleStack::centered_copy() const {
  const Matrix mu = mean();
  std::vector<double> out(data_.size());
  for (Index s = 0; s < n_; ++s)
    Eigen::Map<RowMatrix>(out.data() + s * k1_ * k2_, k1_, k2_) = sample(s) - mu;
  return SampleStack(n_, k1_, k2_, std::move(out), true);
}

SampleStack SampleStack::subset(std::span<const Index> indices) const {
  if (indices.empty()) throw ShapeMismatch("subset needs at least one index");
  const Index cell = k1_ * k2_;
  std::vector<double> out;
  out.reserve(indices.size() * static_cast<std::size_t>(cell));
  for (Index s : indices) {
    if (s < 0 || s >= n_) throw ShapeMismatch("subset index out of range");
    out.insert(out.end(), data_.begin() + s * cell, data_.begin() + (s + 1) * cell);
  }
  return SampleStack(static_cast<Index>(indices.size()), k1_, k2_, std::move(out), false);
}

SampleStack SampleStack::concat(const SampleStack& a, const SampleStack& b) {
  if (a.k1_ != b.k1_ || a.k2_ != b.k2_) throw ShapeMismatch("concat: grids differ");
  std::vector<double> out(a.data_);
  out.insert(out.end(), b.data_.begin(), b.data_.end());
  return SampleStack(a.n_ + b.n_, a.k1_, a.k2_, std::move(out), false);
}

CovTensor4::CovTensor4(Index k1, Index k2, Index cap) : k1_(k1), k2_(k2) {
  if (k1 < 1 || k2 < 1) throw ShapeMismatch("CovTensor4 needs k1, k2 >= 1");
  if (k1 * k2 > cap)
    throw OracleCapExceeded("dense 4-index tensor on a " + std::to_string(k1) + "x" +
                            std::to_string(k2) + " grid exceeds the cap of " + std::to_string(cap) +
                            " grid points");
  data_.assign(static_cast<std::size_t>(k1 * k2 * k1 * k2), 0.0);
}

double CovTensor4::fro_norm() const { return matricized().norm(); }

bool CovTensor4::is_symmetric(double tol) const {
  auto m = matricized();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

CovTensor4& CovTensor4::operator+=(const CovTensor4& other) {
  if (other.k1_ != k1_ || other.k2_ != k2_) throw ShapeMismatch("CovTensor4 grid mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

CovTensor4& CovTensor4::operator-=(const CovTensor4& other) {
  if (other.k1_ != k1_ || other.k2_ != k2_) throw ShapeMismatch("CovTensor4 grid mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

CovTensor4& CovTensor4::operator*=(double c) {
  for (double& v : data_) v *= c;
  return *this;
}

void set_thread_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace sptcov
