#include "sptcov/tracing.hpp"

#include "sptcov/parallel.hpp"

namespace sptcov {

Matrix spt1_sample(const Eigen::Ref<const Matrix>& x, Bandwidth d) {
  check_bandwidth(d, x.cols());
  const Index k1 = x.rows();
  const Index w = x.cols() - d.d;
  if (w == 0) return Matrix::Zero(k1, k1);
  Matrix out(k1, k1);
  out.noalias() = x.leftCols(w) * x.rightCols(w).transpose();
  return out;
}

Matrix spt2_sample(const Eigen::Ref<const Matrix>& x, Bandwidth d) {
  check_bandwidth(d, x.rows());
  const Index k2 = x.cols();
  const Index h = x.rows() - d.d;
  if (h == 0) return Matrix::Zero(k2, k2);
  Matrix out(k2, k2);
  out.noalias() = x.topRows(h).transpose() * x.bottomRows(h);
  return out;
}

double strace_sample(const Eigen::Ref<const Matrix>& x, Bandwidth d) {
  check_bandwidth(d, std::min(x.rows(), x.cols()));
  const Index h = x.rows() - d.d;
  const Index w = x.cols() - d.d;
  if (h == 0 || w == 0) return 0.0;
  return x.topLeftCorner(h, w).cwiseProduct(x.bottomRightCorner(h, w)).sum();
}

Matrix spt1_stack(const SampleStack& samples, Bandwidth d) {
  check_bandwidth(d, samples.k2());
  const Index k1 = samples.k1();
  Matrix sum = ordered_sum(samples.n(), Matrix(Matrix::Zero(k1, k1)),
                           [&](Index s) { return spt1_sample(samples.sample(s), d); });
  return sum / static_cast<double>(samples.n());
}

Matrix spt2_stack(const SampleStack& samples, Bandwidth d) {
  check_bandwidth(d, samples.k1());
  const Index k2 = samples.k2();
  Matrix sum = ordered_sum(samples.n(), Matrix(Matrix::Zero(k2, k2)),
                           [&](Index s) { return spt2_sample(samples.sample(s), d); });
  return sum / static_cast<double>(samples.n());
}

double strace_stack(const SampleStack& samples, Bandwidth d) {
  check_bandwidth(d, std::min(samples.k1(), samples.k2()));
  const double sum =
      ordered_sum(samples.n(), 0.0, [&](Index s) { return strace_sample(samples.sample(s), d); });
  return sum / static_cast<double>(samples.n());
}

Matrix spt_tensor(const CovTensor4& t, Bandwidth d, Axis axis) {
  const Index k1 = t.k1();
  const Index k2 = t.k2();
  if (axis == Axis::first) {
    check_bandwidth(d, k2);
    Matrix out = Matrix::Zero(k1, k1);
    for (Index i = 0; i < k1; ++i)
      for (Index k = 0; k < k1; ++k)
        for (Index j = 0; j + d.d < k2; ++j) out(i, k) += t(i, j, k, j + d.d);
    return out;
  }
  check_bandwidth(d, k1);
  Matrix out = Matrix::Zero(k2, k2);
  for (Index j = 0; j < k2; ++j)
    for (Index l = 0; l < k2; ++l)
      for (Index i = 0; i + d.d < k1; ++i) out(j, l) += t(i, j, i + d.d, l);
  return out;
}

double strace_tensor(const CovTensor4& t, Bandwidth d) {
  check_bandwidth(d, std::min(t.k1(), t.k2()));
  double s = 0.0;
  for (Index i = 0; i + d.d < t.k1(); ++i)
    for (Index j = 0; j + d.d < t.k2(); ++j) s += t(i, j, i + d.d, j + d.d);
  return s;
}

double shifted_trace(const Matrix& a, Bandwidth d) {
  check_bandwidth(d, a.rows());
  double s = 0.0;
  for (Index i = 0; i + d.d < a.rows(); ++i) s += a(i, i + d.d);
  return s;
}

CovTensor4 separable_tensor(const Matrix& a1, const Matrix& a2, Index cap) {
  CovTensor4 t(a1.rows(), a2.rows(), cap);
  for (Index i = 0; i < a1.rows(); ++i)
    for (Index j = 0; j < a2.rows(); ++j)
      for (Index k = 0; k < a1.rows(); ++k)
        for (Index l = 0; l < a2.rows(); ++l) t(i, j, k, l) = a1(i, k) * a2(j, l);
  return t;
}

CovTensor4 separable_tensor(const SymMatrix& a1, const SymMatrix& a2, Index cap) {
  return separable_tensor(a1.matrix(), a2.matrix(), cap);
}

CovTensor4 outer_tensor(const Eigen::Ref<const Matrix>& x, Index cap) {
  CovTensor4 t(x.rows(), x.cols(), cap);
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j)
      for (Index k = 0; k < x.rows(); ++k)
        for (Index l = 0; l < x.cols(); ++l) t(i, j, k, l) = x(i, j) * x(k, l);
  return t;
}

}  // namespace sptcov
