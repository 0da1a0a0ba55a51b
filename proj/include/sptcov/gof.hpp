#pragma once

#include <cstdint>
#include <vector>

#include "sptcov/estimators.hpp"

namespace sptcov {

struct GofConfig {
  Bandwidth d;
  Index i_dims = 2;
  Index j_dims = 2;
  Index n_boot = 1000;
  std::uint64_t seed = 0;
  EstimateOptions estimate;
  /// Re-derive the projection subspace from every bootstrap fit.
  bool recompute_subspace = false;
};

/// Leading I eigenvectors of fit.a1 and J of fit.a2 with their eigenvalues.
struct GofSubspace {
  Matrix e;  // k1 x I
  Matrix f;  // k2 x J
  Vector lambda;
  Vector gamma;
};

GofSubspace gof_subspace(const SepPlusBandedCov& fit, Index i_dims, Index j_dims);

/// sum_{i,j} ( (1/N) sum_n <X_n, e_i f_j^T>^2 - lambda_i gamma_j - <e_i f_j^T, B e_i f_j^T> )^2
double gof_statistic(const SampleStack& samples, const SepPlusBandedCov& fit, const GofConfig& cfg);

struct GofResult {
  double p_value = 1.0;
  double statistic = 0.0;
  std::vector<double> boot;
  Index redraws = 0;
  SepPlusBandedCov fit;
};

/// Empirical bootstrap: p = (1 + #{boot > statistic}) / (n_boot + 1).
GofResult gof_test(const SampleStack& samples, const GofConfig& cfg);

}  // namespace sptcov
