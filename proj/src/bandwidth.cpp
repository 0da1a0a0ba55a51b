#include "sptcov/bandwidth.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "sptcov/fast_norm.hpp"
#include "sptcov/parallel.hpp"
#include "sptcov/rng.hpp"
#include "sptcov/solver.hpp"

namespace sptcov {

double quad_form(const SepPlusBandedCov& c, const Eigen::Ref<const Matrix>& x) {
  return ModelOperator(c).quad_form(x);
}

std::vector<Index> assign_folds(Index n, Index folds, std::uint64_t seed) {
  if (folds < 2 || folds > n) throw ShapeMismatch("fold count must lie in [2, N]");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Philox rng(seed, 0x666f6c64u);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<Index> fold_of(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])] = r * folds / n;
  return fold_of;
}

double cv_objective(const SampleStack& samples, Bandwidth d, std::span<const Index> fold_of,
                    const EstimateOptions& opts) {
  const Index n = samples.n();
  if (static_cast<Index>(fold_of.size()) != n) throw ShapeMismatch("one fold label per sample is required");
  check_bandwidth(d, std::min(samples.k1(), samples.k2()));
  Index folds = 0;
  for (Index f : fold_of) {
    if (f < 0) throw ShapeMismatch("fold labels must be non-negative");
    folds = std::max(folds, f + 1);
  }

  const MomentSums zero = MomentSums::zero(samples.k1(), samples.k2(), d, opts.kind);
  std::vector<MomentSums> per_fold(static_cast<std::size_t>(folds), zero);
  parallel_for(folds, [&](Index f) {
    MomentSums acc = zero;
    for (Index i = 0; i < n; ++i)
      if (fold_of[static_cast<std::size_t>(i)] == f) acc += MomentSums::of_sample(Matrix(samples.sample(i)), d, opts.kind);
    per_fold[static_cast<std::size_t>(f)] = std::move(acc);
  });
  MomentSums total = zero;
  for (const auto& m : per_fold) total += m;

  const SepPlusBandedCov full = estimate_from_moments(total, opts);
  std::vector<NormTerm> terms;
  append_terms(terms, full);
  const double norm2 = structured_fro_norm2(terms);

  const Matrix mean = opts.center ? samples.mean() : Matrix::Zero(samples.k1(), samples.k2());
  std::vector<double> fold_cross(static_cast<std::size_t>(folds), 0.0);
  for (Index f = 0; f < folds; ++f) {
    const auto& held = per_fold[static_cast<std::size_t>(f)];
    if (held.weight == 0.0) continue;
    MomentSums rest = total;
    rest -= held;
    const SepPlusBandedCov c = estimate_from_moments(rest, opts);
    const ModelOperator op(c);
    double acc = 0.0;
    for (Index i = 0; i < n; ++i)
      if (fold_of[static_cast<std::size_t>(i)] == f) acc += op.quad_form(Matrix(samples.sample(i)) - mean);
    fold_cross[static_cast<std::size_t>(f)] = acc;
  }
  const double cross = std::accumulate(fold_cross.begin(), fold_cross.end(), 0.0);
  return norm2 - 2.0 * cross / static_cast<double>(n);
}

double cv_objective(const SampleStack& samples, Bandwidth d, Index folds, std::uint64_t seed,
                    const EstimateOptions& opts) {
  const auto fold_of = assign_folds(samples.n(), folds, seed);
  return cv_objective(samples, d, fold_of, opts);
}

BandwidthSelection select_bandwidth(const SampleStack& samples, const BandwidthSearch& search) {
  if (search.candidates.empty()) throw ShapeMismatch("bandwidth search needs at least one candidate");
  const Index max_d = std::min(samples.k1(), samples.k2());
  for (const auto& d : search.candidates) check_bandwidth(d, max_d);
  if (search.tau < 0.0) throw ShapeMismatch("penalty tau must be non-negative");
  const auto fold_of = assign_folds(samples.n(), search.folds, search.seed);

  BandwidthSelection out;
  std::optional<std::size_t> best;
  for (const auto& d : search.candidates) {
    CvEntry e{d, std::numeric_limits<double>::quiet_NaN(), false, {}};
    try {
      e.objective = cv_objective(samples, d, fold_of, search.estimate) + search.tau * static_cast<double>(d.d);
      e.valid = std::isfinite(e.objective);
      if (!e.valid) e.reason = "non-finite objective";
    } catch (const DegenerateTrace& ex) {
      e.reason = ex.what();
    }
    out.table.push_back(e);
    const std::size_t idx = out.table.size() - 1;
    if (!e.valid) continue;
    if (!best) {
      best = idx;
      continue;
    }
    const CvEntry& b = out.table[*best];
    if (e.objective < b.objective || (e.objective == b.objective && e.d < b.d)) best = idx;
  }
  if (!best) throw DegenerateTrace(search.candidates.front().d);
  out.d = out.table[*best].d;
  return out;
}

}  // namespace sptcov
