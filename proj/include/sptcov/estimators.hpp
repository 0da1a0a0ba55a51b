#pragma once

#include <span>
#include <utility>
#include <vector>

#include "sptcov/model.hpp"
#include "sptcov/stationary.hpp"
#include "sptcov/tracing.hpp"

namespace sptcov {

struct EstimateOptions {
  BandedKind kind = BandedKind::stationary;
  /// Subtract the per-cell sample mean (Ĉ_N uses the plain 1/N average).
  bool center = true;
  /// Sign flip + eigenvalue clipping of the factors, spectrum clipping of a
  /// stationary symbol. Never applied to a BandedTensor.
  bool psd = true;
};

/// Everything the estimators need from a (weighted) set of samples, as
/// linear sums so that subsets, folds and bootstrap resamples can be formed
/// by adding and subtracting per-sample contributions.
struct MomentSums {
  Bandwidth d;
  BandedKind kind = BandedKind::none;
  double weight = 0.0;
  Matrix sum_x;   // k1 x k2
  Matrix spt1;    // k1 x k1
  Matrix spt2;    // k2 x k2
  double strace = 0.0;
  double energy = 0.0;  // strace at lag 0, used to judge degeneracy
  Matrix lags;    // (2k1-1) x (2k2-1) Toeplitz-average sums, stationary kind only
  std::vector<double> band;  // BandedTensor layout, banded kind only

  static MomentSums zero(Index k1, Index k2, Bandwidth d, BandedKind kind);
  /// Contribution of a single sample (weight 1).
  static MomentSums of_sample(const Eigen::Ref<const Matrix>& x, Bandwidth d, BandedKind kind);

  Index k1() const { return sum_x.rows(); }
  Index k2() const { return sum_x.cols(); }

  MomentSums& operator+=(const MomentSums& o);
  MomentSums& operator-=(const MomentSums& o);
  /// this += w * o
  MomentSums& add_scaled(const MomentSums& o, double w);
};

/// Sum of per-sample contributions over the whole stack.
MomentSums accumulate_moments(const SampleStack& samples, Bandwidth d, BandedKind kind);

struct SeparableEstimate {
  SymMatrix a1;
  SymMatrix a2;
};

/// a1 = sym(spt1), a2 = sym(spt2) / strace from centered moment averages,
/// followed by the optional joint sign flip and eigenvalue clipping.
SeparableEstimate separable_from_moments(const MomentSums& m, const EstimateOptions& opts);
SepPlusBandedCov estimate_from_moments(const MomentSums& m, const EstimateOptions& opts);

SeparableEstimate estimate_separable(const SampleStack& samples, Bandwidth d, const EstimateOptions& opts = {});
SepPlusBandedCov estimate_full(const SampleStack& samples, Bandwidth d, const EstimateOptions& opts = {});

/// Population-level pipeline on a dense covariance (oracle scale).
SepPlusBandedCov estimate_full_tensor(const CovTensor4& t, Bandwidth d, const EstimateOptions& opts = {});

/// Plain partial tracing (separable model, d = 0).
SeparableEstimate baseline_pt(const SampleStack& samples, const EstimateOptions& opts = {});

struct NkpResult {
  SymMatrix a1;
  SymMatrix a2;
  int iterations = 0;
  bool converged = false;
  double last_change = 0.0;
};

/// Nearest Kronecker product of the empirical covariance by alternating
/// least squares (power iteration on the rearranged covariance), starting
/// from a2 = I. Never forms the covariance: O(N K^3) per iteration.
NkpResult baseline_nkp(const SampleStack& samples, int iters = 100, double tol = 1e-10, bool center = true);
/// Same iteration on a structured operator (used for the separable bias of a truth).
NkpResult nkp_model(const SepPlusBandedCov& c, int iters = 100, double tol = 1e-10);

/// (1/N) sum (X_n - mean) (x) (X_n - mean), dense (oracle scale).
CovTensor4 empirical_cov(const SampleStack& samples, bool center = true, Index cap = CovTensor4::kDefaultCap);

/// Symmetric eigendecomposition with negative eigenvalues set to zero,
/// preceded by a global sign flip when the trace is negative (if allowed).
SymMatrix psd_project_matrix(const SymMatrix& a, bool allow_flip = true);

/// ||est - truth||_F / ||truth||_F, structurally.
double rel_error(const SepPlusBandedCov& est, const SepPlusBandedCov& truth);
/// Dense fallback.
double rel_error(const CovTensor4& est, const SepPlusBandedCov& truth);
/// Error of the raw empirical covariance of `samples`, without forming it:
/// ||Ĉ_N||^2 from the sample Gram matrix, <Ĉ_N, C> from quadratic forms.
double empirical_rel_error(const SampleStack& samples, const SepPlusBandedCov& truth, bool center = true);
/// ||Ĉ_N - C||_F^2 for a structured C.
double empirical_distance2(const SampleStack& samples, const SepPlusBandedCov& c, bool center = true);

/// Wraps a factor pair as a model without banded part.
SepPlusBandedCov as_model(const SeparableEstimate& s, Bandwidth d = Bandwidth{0});

}  // namespace sptcov
