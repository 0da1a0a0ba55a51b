#pragma once

#include "sptcov/types.hpp"

namespace sptcov {

// Shifted partial tracing computed straight from the data. For a sample x,
// the lag-d contractions of x (x) x are
//
//   spt1[i,k] = sum_{j < k2-d} x[i,j] x[k,j+d]
//   spt2[j,l] = sum_{i < k1-d} x[i,j] x[i+d,l]
//   strace    = sum_{i < k1-d, j < k2-d} x[i,j] x[i+d,j+d]
//
// Each is a product of x with a shifted copy of itself, so x (x) x is never formed.

Matrix spt1_sample(const Eigen::Ref<const Matrix>& x, Bandwidth d);
Matrix spt2_sample(const Eigen::Ref<const Matrix>& x, Bandwidth d);
double strace_sample(const Eigen::Ref<const Matrix>& x, Bandwidth d);

// Stack-level versions average the per-sample results (no centering here;
// estimators handle the mean correction).
Matrix spt1_stack(const SampleStack& samples, Bandwidth d);
Matrix spt2_stack(const SampleStack& samples, Bandwidth d);
double strace_stack(const SampleStack& samples, Bandwidth d);

enum class Axis { first = 1, second = 2 };

// Direct O(K^4) evaluation on a dense tensor.
Matrix spt_tensor(const CovTensor4& t, Bandwidth d, Axis axis);
double strace_tensor(const CovTensor4& t, Bandwidth d);

/// Shifted trace of a single K x K matrix: sum_i a[i, i+d].
double shifted_trace(const Matrix& a, Bandwidth d);

/// T[i,j,k,l] = a1[i,k] a2[j,l].
CovTensor4 separable_tensor(const SymMatrix& a1, const SymMatrix& a2,
                            Index cap = CovTensor4::kDefaultCap);
CovTensor4 separable_tensor(const Matrix& a1, const Matrix& a2, Index cap = CovTensor4::kDefaultCap);

/// x (x) x, i.e. T[i,j,k,l] = x[i,j] x[k,l].
CovTensor4 outer_tensor(const Eigen::Ref<const Matrix>& x, Index cap = CovTensor4::kDefaultCap);

}  // namespace sptcov
