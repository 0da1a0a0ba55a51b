#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sptcov/estimators.hpp"

namespace sptcov {

struct BandwidthSearch {
  std::vector<Bandwidth> candidates;
  Index folds = 10;
  double tau = 0.0;
  std::uint64_t seed = 0;
  EstimateOptions estimate;
};

/// <x, C x> through the fast operator applications.
double quad_form(const SepPlusBandedCov& c, const Eigen::Ref<const Matrix>& x);

/// Fold label of every sample: a seeded shuffle cut into contiguous blocks.
std::vector<Index> assign_folds(Index n, Index folds, std::uint64_t seed);

/// Xi(d) = ||C(d)||^2 - (2/N) sum_n <X_n, C_{-fold(n)}(d) X_n>. Throws
/// DegenerateTrace if the full or any held-out estimate is degenerate.
double cv_objective(const SampleStack& samples, Bandwidth d, std::span<const Index> fold_of,
                    const EstimateOptions& opts = {});
double cv_objective(const SampleStack& samples, Bandwidth d, Index folds, std::uint64_t seed = 0,
                    const EstimateOptions& opts = {});

struct CvEntry {
  Bandwidth d;
  double objective = 0.0;  // Xi(d) + tau d, NaN when invalid
  bool valid = false;
  std::string reason;
};

struct BandwidthSelection {
  Bandwidth d;
  std::vector<CvEntry> table;
};

/// argmin over valid candidates of Xi(d) + tau d, ties to the smaller d.
BandwidthSelection select_bandwidth(const SampleStack& samples, const BandwidthSearch& search);

}  // namespace sptcov
