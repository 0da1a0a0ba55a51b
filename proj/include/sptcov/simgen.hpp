#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sptcov/estimators.hpp"
#include "sptcov/rng.hpp"

namespace sptcov {

enum class SepKind { legendre, wiener };
enum class FilterKind { signed_alternating, epanechnikov };
enum class NoiseProfile { constant, ramp };

struct SimConfig {
  Index k = 20;
  Index k2 = 0;  // 0: square grid
  Index n = 100;
  double tau = 1.0;
  /// Moving-average window 2p+1; 0 disables the banded process.
  Index d_true = 0;
  SepKind sep_kind = SepKind::legendre;
  FilterKind filter_kind = FilterKind::signed_alternating;
  /// Measurement-error variance (per cell maximum for the ramp profile).
  double noise_sigma2 = 0.0;
  NoiseProfile noise_profile = NoiseProfile::constant;
  std::uint64_t seed = 0;
  std::uint32_t cell = 0;
  std::uint32_t rep = 0;

  Index grid1() const { return k; }
  Index grid2() const { return k2 > 0 ? k2 : k; }
  void validate() const;
};

/// Rank-r covariance with shifted Legendre eigenvectors on the midpoint grid
/// and eigenvalues (r+1-j)/r, scaled to unit Frobenius norm.
SymMatrix legendre_cov(Index k, Index rank = 7);
/// min(t_i, t_j) on t_i = i/k, unit Frobenius norm.
SymMatrix wiener_cov(Index k);

struct MaFilter {
  Index p = 0;
  Matrix q;  // (2p+1) x (2p+1), entry (a+p, b+p) for offsets a, b in [-p, p]
  double operator()(Index a, Index b) const { return q(a + p, b + p); }
};

MaFilter ma_filter(FilterKind kind, Index p);

struct MaSymbol {
  StationarySymbol symbol;  // unit Frobenius norm, band 2p+1
  double scale = 1.0;       // multiplier on the filter output realizing that symbol
};

/// Filter autocorrelation s(h,l) = sum q(a,b) q(a-h, b-l), normalized.
MaSymbol ma_symbol(const MaFilter& f, Index k1, Index k2);

/// L1 Z L2^T with symmetric square roots of the (clipped) factors.
class MatrixNormalSampler {
 public:
  MatrixNormalSampler(const SymMatrix& a1, const SymMatrix& a2);
  Matrix draw(Philox& rng) const;

 private:
  Matrix l1_;
  Matrix l2_;
};

Matrix sample_matrix_normal(const SymMatrix& a1, const SymMatrix& a2, Philox& rng);
/// Moving average of a white field extended past the grid, times `scale`.
Matrix sample_ma(const MaFilter& f, Index k1, Index k2, double scale, Philox& rng);

struct Simulation {
  SampleStack samples;
  SepPlusBandedCov truth;
};

/// The population covariance implied by cfg (no sampling).
SepPlusBandedCov sim_truth(const SimConfig& cfg);
Simulation simulate(const SimConfig& cfg);

enum class Method { spt_d, spt_cv, pt, nkp, ece };
std::string method_name(Method m);
Method parse_method(const std::string& s);

enum class GridAxis { d, tau, n, k };
std::string axis_name(GridAxis a);
GridAxis parse_axis(const std::string& s);

/// Largest default CV candidate: bandwidths up to a fifth of the grid.
Index default_cv_max(Index k1, Index k2);

struct ExperimentConfig {
  SimConfig base;
  GridAxis axis = GridAxis::d;
  std::vector<double> values;
  std::vector<Method> methods{Method::spt_d, Method::spt_cv, Method::pt, Method::nkp, Method::ece};
  Index reps = 20;
  /// Candidate grid for SPT-CV; empty: 0 .. default_cv_max.
  std::vector<Index> cv_candidates;
  Index folds = 10;
  BandedKind kind = BandedKind::stationary;
  bool bias = true;
};

struct ExperimentRow {
  GridAxis axis = GridAxis::d;
  double value = 0.0;
  std::string method;
  double median = 0.0;
  double mean = 0.0;
  Index valid_reps = 0;
  std::vector<double> errors;
};

/// Relative errors ||C - C_hat|| / ||C|| per method over the grid, with a
/// "bias" row (best separable approximation of the truth) per cell.
std::vector<ExperimentRow> error_experiment(const ExperimentConfig& cfg);

std::string experiment_csv(const std::vector<ExperimentRow>& rows);

}  // namespace sptcov
