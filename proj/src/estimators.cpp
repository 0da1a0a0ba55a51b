#include "sptcov/estimators.hpp"

#include <cmath>
#include <limits>

#include "sptcov/fast_norm.hpp"
#include "sptcov/parallel.hpp"
#include "sptcov/solver.hpp"

namespace sptcov {

MomentSums MomentSums::zero(Index k1, Index k2, Bandwidth d, BandedKind kind) {
  check_bandwidth(d, std::min(k1, k2));
  MomentSums m;
  m.d = d;
  m.kind = kind;
  m.sum_x = Matrix::Zero(k1, k2);
  m.spt1 = Matrix::Zero(k1, k1);
  m.spt2 = Matrix::Zero(k2, k2);
  if (kind == BandedKind::stationary) m.lags = Matrix::Zero(2 * k1 - 1, 2 * k2 - 1);
  if (kind == BandedKind::banded) {
    const Index w = d.d > 0 ? 2 * d.d - 1 : 0;
    m.band.assign(static_cast<std::size_t>(k1 * k2 * w * w), 0.0);
  }
  return m;
}

MomentSums MomentSums::of_sample(const Eigen::Ref<const Matrix>& x, Bandwidth d, BandedKind kind) {
  const Index k1 = x.rows();
  const Index k2 = x.cols();
  MomentSums m = zero(k1, k2, d, kind);
  m.weight = 1.0;
  m.sum_x = x;
  m.spt1 = spt1_sample(x, d);
  m.spt2 = spt2_sample(x, d);
  m.strace = strace_sample(x, d);
  m.energy = x.squaredNorm();
  if (kind == BandedKind::stationary) m.lags = topavg_sample(x).lags();
  if (kind == BandedKind::banded && d.d > 0) {
    const Index w = 2 * d.d - 1;
    for (Index i = 0; i < k1; ++i)
      for (Index j = 0; j < k2; ++j) {
        double* row = m.band.data() + (i * k2 + j) * w * w;
        for (Index p = -(d.d - 1); p < d.d; ++p) {
          if (i + p < 0 || i + p >= k1) continue;
          for (Index q = -(d.d - 1); q < d.d; ++q) {
            if (j + q < 0 || j + q >= k2) continue;
            row[(p + d.d - 1) * w + (q + d.d - 1)] = x(i, j) * x(i + p, j + q);
          }
        }
      }
  }
  return m;
}

MomentSums& MomentSums::add_scaled(const MomentSums& o, double w) {
  if (o.d != d || o.kind != kind || o.sum_x.rows() != sum_x.rows() || o.sum_x.cols() != sum_x.cols())
    throw ShapeMismatch("MomentSums: incompatible operands");
  weight += w * o.weight;
  sum_x += w * o.sum_x;
  spt1 += w * o.spt1;
  spt2 += w * o.spt2;
  strace += w * o.strace;
  energy += w * o.energy;
  if (lags.size() > 0) lags += w * o.lags;
  for (std::size_t i = 0; i < band.size(); ++i) band[i] += w * o.band[i];
  return *this;
}

MomentSums& MomentSums::operator+=(const MomentSums& o) { return add_scaled(o, 1.0); }
MomentSums& MomentSums::operator-=(const MomentSums& o) { return add_scaled(o, -1.0); }

MomentSums accumulate_moments(const SampleStack& samples, Bandwidth d, BandedKind kind) {
  const MomentSums z = MomentSums::zero(samples.k1(), samples.k2(), d, kind);
  return ordered_sum(samples.n(), z, [&](Index n) {
    return MomentSums::of_sample(Matrix(samples.sample(n)), d, kind);
  });
}

namespace {

SymMatrix clip_negative(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix());
  if (es.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
  const Vector lam = es.eigenvalues().cwiseMax(0.0);
  return SymMatrix(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
}

}  // namespace

SymMatrix psd_project_matrix(const SymMatrix& a, bool allow_flip) {
  if (allow_flip && a.trace() < 0.0) return clip_negative(a.scaled(-1.0));
  return clip_negative(a);
}

SeparableEstimate separable_from_moments(const MomentSums& m, const EstimateOptions& opts) {
  if (!(m.weight > 0.0)) throw ShapeMismatch("estimation needs a positive total weight");
  const double w = m.weight;
  const Matrix mean = m.sum_x / w;
  Matrix s1 = m.spt1 / w;
  Matrix s2 = m.spt2 / w;
  double t = m.strace / w;
  double energy = m.energy / w;
  if (opts.center) {
    s1 -= spt1_sample(mean, m.d);
    s2 -= spt2_sample(mean, m.d);
    t -= strace_sample(mean, m.d);
    energy -= mean.squaredNorm();
  }
  if (!(std::abs(t) > 1e-12 * std::abs(energy)) || energy == 0.0) throw DegenerateTrace(m.d.d);

  SymMatrix a1(s1);
  SymMatrix a2(s2 / t);
  if (opts.psd) {
    if (a1.trace() < 0.0) {
      a1 = a1.scaled(-1.0);
      a2 = a2.scaled(-1.0);
    }
    a1 = psd_project_matrix(a1, false);
    a2 = psd_project_matrix(a2, false);
  }
  return {a1, a2};
}

SepPlusBandedCov as_model(const SeparableEstimate& s, Bandwidth d) {
  SepPlusBandedCov c{s.a1, s.a2, std::monostate{}, d, true};
  return c;
}

SepPlusBandedCov estimate_from_moments(const MomentSums& m, const EstimateOptions& opts) {
  if (opts.kind != BandedKind::none && opts.kind != m.kind)
    throw ShapeMismatch("moment sums were not accumulated for the requested banded kind");
  SepPlusBandedCov c = as_model(separable_from_moments(m, opts), m.d);
  const Index k1 = m.k1();
  const Index k2 = m.k2();
  const double w = m.weight;
  const Matrix mean = m.sum_x / w;

  if (opts.kind == BandedKind::stationary) {
    Matrix lags = m.lags / w;
    if (opts.center) lags -= topavg_sample(mean).lags();
    StationarySymbol sym = StationarySymbol(k1, k2, lags) - topavg_separable(c.a1, c.a2);
    sym = sym.band_clipped(m.d);
    if (opts.psd) sym = psd_project_symbol(sym);
    c.banded = std::move(sym);
  } else if (opts.kind == BandedKind::banded) {
    BandedTensor b(k1, k2, m.d);
    const Index d = m.d.d;
    const Index wd = b.width();
    for (Index i = 0; i < k1; ++i)
      for (Index j = 0; j < k2; ++j)
        for (Index p = -(d - 1); p < d; ++p)
          for (Index q = -(d - 1); q < d; ++q) {
            if (!b.in_grid(i, j, p, q)) continue;
            double v = m.band[static_cast<std::size_t>((i * k2 + j) * wd * wd + (p + d - 1) * wd + (q + d - 1))] / w;
            if (opts.center) v -= mean(i, j) * mean(i + p, j + q);
            b(i, j, p, q) = v - c.a1(i, i + p) * c.a2(j, j + q);
          }
    c.banded = std::move(b);
  }
  return c;
}

SeparableEstimate estimate_separable(const SampleStack& samples, Bandwidth d, const EstimateOptions& opts) {
  return separable_from_moments(accumulate_moments(samples, d, BandedKind::none), opts);
}

SepPlusBandedCov estimate_full(const SampleStack& samples, Bandwidth d, const EstimateOptions& opts) {
  return estimate_from_moments(accumulate_moments(samples, d, opts.kind), opts);
}

SepPlusBandedCov estimate_full_tensor(const CovTensor4& t, Bandwidth d, const EstimateOptions& opts) {
  check_bandwidth(d, std::min(t.k1(), t.k2()));
  const double tr = strace_tensor(t, d);
  const double energy = strace_tensor(t, Bandwidth{0});
  if (!(std::abs(tr) > 1e-12 * std::abs(energy)) || energy == 0.0) throw DegenerateTrace(d.d);
  SymMatrix a1(spt_tensor(t, d, Axis::first));
  SymMatrix a2(spt_tensor(t, d, Axis::second) / tr);
  if (opts.psd) {
    if (a1.trace() < 0.0) {
      a1 = a1.scaled(-1.0);
      a2 = a2.scaled(-1.0);
    }
    a1 = psd_project_matrix(a1, false);
    a2 = psd_project_matrix(a2, false);
  }
  SepPlusBandedCov c = as_model(SeparableEstimate{a1, a2}, d);
  if (opts.kind == BandedKind::none) return c;
  CovTensor4 rest = t;
  rest -= separable_tensor(a1, a2, std::max<Index>(t.k1() * t.k2(), CovTensor4::kDefaultCap));
  if (opts.kind == BandedKind::stationary) {
    StationarySymbol sym = topavg_tensor(rest).band_clipped(d);
    if (opts.psd) sym = psd_project_symbol(sym);
    c.banded = std::move(sym);
  } else {
    c.banded = BandedTensor::from_dense(rest, d);
  }
  return c;
}

SeparableEstimate baseline_pt(const SampleStack& samples, const EstimateOptions& opts) {
  return estimate_separable(samples, Bandwidth{0}, opts);
}

namespace {

// ||a1 (x) a2 - b1 (x) b2||_F relative to ||a1 (x) a2||_F.
double product_change(const Matrix& a1, const Matrix& a2, const Matrix& b1, const Matrix& b2) {
  const double na = a1.squaredNorm() * a2.squaredNorm();
  const double nb = b1.squaredNorm() * b2.squaredNorm();
  const double cross = a1.cwiseProduct(b1).sum() * a2.cwiseProduct(b2).sum();
  const double diff = std::max(0.0, na + nb - 2.0 * cross);
  return na > 0.0 ? std::sqrt(diff / na) : std::sqrt(diff);
}

// Alternating least squares for the best a1 (x) a2 approximation; c2(a2)
// and c1(a1) are the two contractions of the rearranged operator.
template <class C2, class C1>
NkpResult nkp_iterate(Index k1, Index k2, int iters, double tol, C2&& c2, C1&& c1) {
  Matrix a2 = Matrix::Identity(k2, k2);
  Matrix a1;
  NkpResult r{SymMatrix(), SymMatrix(), 0, false, std::numeric_limits<double>::infinity()};
  for (int it = 1; it <= iters; ++it) {
    const double n2 = a2.squaredNorm();
    if (!(n2 > 0.0)) break;
    Matrix b1 = symmetrize(c2(a2)).matrix() / n2;
    const double n1 = b1.squaredNorm();
    if (!(n1 > 0.0)) {
      a1 = b1;
      r.iterations = it;
      break;
    }
    Matrix b2 = symmetrize(c1(b1)).matrix() / n1;
    r.last_change = a1.size() > 0 ? product_change(b1, b2, a1, a2) : 1.0;
    a1 = std::move(b1);
    a2 = std::move(b2);
    r.iterations = it;
    if (r.last_change < tol) {
      r.converged = true;
      break;
    }
  }
  if (a1.size() == 0) a1 = Matrix::Zero(k1, k1);
  r.a1 = SymMatrix(a1);
  r.a2 = SymMatrix(a2);
  return r;
}

}  // namespace

NkpResult baseline_nkp(const SampleStack& samples, int iters, double tol, bool center) {
  const Index k1 = samples.k1();
  const Index k2 = samples.k2();
  const double n = static_cast<double>(samples.n());
  const Matrix mean = center ? samples.mean() : Matrix::Zero(k1, k2);
  auto c2 = [&](const Matrix& a2) {
    Matrix s = ordered_sum(samples.n(), Matrix(Matrix::Zero(k1, k1)), [&](Index i) {
      const Matrix x = samples.sample(i);
      return Matrix(x * a2 * x.transpose());
    });
    return Matrix(s / n - mean * a2 * mean.transpose());
  };
  auto c1 = [&](const Matrix& a1) {
    Matrix s = ordered_sum(samples.n(), Matrix(Matrix::Zero(k2, k2)), [&](Index i) {
      const Matrix x = samples.sample(i);
      return Matrix(x.transpose() * a1 * x);
    });
    return Matrix(s / n - mean.transpose() * a1 * mean);
  };
  return nkp_iterate(k1, k2, iters, tol, c2, c1);
}

namespace {

// Signed diagonal sums D(p) = sum_i a[i, i+p], stored at p + k - 1.
Vector diagonal_sums(const Matrix& a) {
  const Index k = a.rows();
  Vector out = Vector::Zero(2 * k - 1);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) out(j - i + k - 1) += a(i, j);
  return out;
}

}  // namespace

NkpResult nkp_model(const SepPlusBandedCov& c, int iters, double tol) {
  const Index k1 = c.k1();
  const Index k2 = c.k2();
  const Matrix& f1 = c.a1.matrix();
  const Matrix& f2 = c.a2.matrix();
  const StationarySymbol* sym = c.symbol();
  const BandedTensor* bt = c.banded_tensor();

  auto c2 = [&](const Matrix& a2) {
    Matrix g = f1 * f2.cwiseProduct(a2).sum();
    if (sym) {
      const Vector d2 = diagonal_sums(a2);
      for (Index i = 0; i < k1; ++i)
        for (Index k = 0; k < k1; ++k) {
          double acc = 0.0;
          for (Index q = -(k2 - 1); q < k2; ++q) acc += (*sym)(k - i, q) * d2(q + k2 - 1);
          g(i, k) += acc;
        }
    }
    if (bt) {
      const Index d = bt->band().d;
      for (Index i = 0; i < k1; ++i)
        for (Index j = 0; j < k2; ++j)
          for (Index p = -(d - 1); p < d; ++p)
            for (Index q = -(d - 1); q < d; ++q)
              if (bt->in_grid(i, j, p, q)) g(i, i + p) += (*bt)(i, j, p, q) * a2(j, j + q);
    }
    return g;
  };
  auto c1 = [&](const Matrix& a1) {
    Matrix g = f2 * f1.cwiseProduct(a1).sum();
    if (sym) {
      const Vector d1 = diagonal_sums(a1);
      for (Index j = 0; j < k2; ++j)
        for (Index l = 0; l < k2; ++l) {
          double acc = 0.0;
          for (Index p = -(k1 - 1); p < k1; ++p) acc += (*sym)(p, l - j) * d1(p + k1 - 1);
          g(j, l) += acc;
        }
    }
    if (bt) {
      const Index d = bt->band().d;
      for (Index i = 0; i < k1; ++i)
        for (Index j = 0; j < k2; ++j)
          for (Index p = -(d - 1); p < d; ++p)
            for (Index q = -(d - 1); q < d; ++q)
              if (bt->in_grid(i, j, p, q)) g(j, j + q) += (*bt)(i, j, p, q) * a1(i, i + p);
    }
    return g;
  };
  return nkp_iterate(k1, k2, iters, tol, c2, c1);
}

CovTensor4 empirical_cov(const SampleStack& samples, bool center, Index cap) {
  const Index k1 = samples.k1();
  const Index k2 = samples.k2();
  CovTensor4 t(k1, k2, cap);
  const Matrix mean = center ? samples.mean() : Matrix::Zero(k1, k2);
  auto m = t.matricized();
  for (Index n = 0; n < samples.n(); ++n) {
    const RowMatrix x = samples.sample(n) - RowMatrix(mean);
    const Eigen::Map<const Vector> v(x.data(), k1 * k2);
    m.noalias() += v * v.transpose();
  }
  t *= 1.0 / static_cast<double>(samples.n());
  return t;
}

double rel_error(const SepPlusBandedCov& est, const SepPlusBandedCov& truth) {
  std::vector<NormTerm> terms;
  append_terms(terms, est, 1.0);
  append_terms(terms, truth, -1.0);
  std::vector<NormTerm> ref;
  append_terms(ref, truth, 1.0);
  const double den = structured_fro_norm2(ref);
  if (!(den > 0.0)) throw Error("rel_error: reference covariance has zero norm");
  return std::sqrt(structured_fro_norm2(terms) / den);
}

double rel_error(const CovTensor4& est, const SepPlusBandedCov& truth) {
  CovTensor4 diff = truth.to_dense(std::max<Index>(est.k1() * est.k2(), CovTensor4::kDefaultCap));
  const double den = diff.fro_norm();
  if (!(den > 0.0)) throw Error("rel_error: reference covariance has zero norm");
  diff -= est;
  return diff.fro_norm() / den;
}

double empirical_distance2(const SampleStack& samples, const SepPlusBandedCov& c, bool center) {
  const Index n = samples.n();
  const Index kk = samples.k1() * samples.k2();
  const RowMatrix mean = center ? RowMatrix(samples.mean()) : RowMatrix::Zero(samples.k1(), samples.k2());
  RowMatrix rows(n, kk);
  for (Index i = 0; i < n; ++i) {
    const RowMatrix x = samples.sample(i) - mean;
    rows.row(i) = Eigen::Map<const Eigen::RowVectorXd>(x.data(), kk);
  }
  const Matrix gram = rows * rows.transpose();
  const double nn = static_cast<double>(n);
  const double emp2 = gram.squaredNorm() / (nn * nn);

  const ModelOperator op(c);
  const double cross = ordered_sum(n, 0.0, [&](Index i) {
    const Eigen::Map<const RowMatrix> x(rows.row(i).data(), samples.k1(), samples.k2());
    return op.quad_form(Matrix(x));
  }) / nn;

  std::vector<NormTerm> terms;
  append_terms(terms, c, 1.0);
  return std::max(0.0, emp2 - 2.0 * cross + structured_fro_norm2(terms));
}

double empirical_rel_error(const SampleStack& samples, const SepPlusBandedCov& truth, bool center) {
  std::vector<NormTerm> ref;
  append_terms(ref, truth, 1.0);
  const double den = structured_fro_norm2(ref);
  if (!(den > 0.0)) throw Error("rel_error: reference covariance has zero norm");
  return std::sqrt(empirical_distance2(samples, truth, center) / den);
}

}  // namespace sptcov
