#include "sptcov/gof.hpp"

#include <atomic>

#include "sptcov/parallel.hpp"
#include "sptcov/rng.hpp"
#include "sptcov/solver.hpp"

namespace sptcov {

GofSubspace gof_subspace(const SepPlusBandedCov& fit, Index i_dims, Index j_dims) {
  if (i_dims < 1 || j_dims < 1 || i_dims > fit.k1() || j_dims > fit.k2())
    throw RankError("subspace ranks must satisfy 1 <= I <= k1 and 1 <= J <= k2");
  const EigenPair e1 = sym_eigen(fit.a1);
  const EigenPair e2 = sym_eigen(fit.a2);
  auto nonzero = [](const Vector& v) {
    const double top = std::max(std::abs(v.maxCoeff()), std::abs(v.minCoeff()));
    Index c = 0;
    for (Index i = 0; i < v.size(); ++i)
      if (std::abs(v(i)) > 1e-12 * top && top > 0.0) ++c;
    return c;
  };
  if (nonzero(e1.phi) < i_dims || nonzero(e2.phi) < j_dims)
    throw RankError("fitted factors have fewer nonzero eigenpairs than the requested subspace (I=" +
                    std::to_string(i_dims) + ", J=" + std::to_string(j_dims) + ")");
  return {e1.u.leftCols(i_dims), e2.u.leftCols(j_dims), e1.phi.head(i_dims), e2.phi.head(j_dims)};
}

namespace {

// P(n, i*J + j) = <X_n, e_i f_j^T>.
Matrix projections(const SampleStack& samples, const GofSubspace& s) {
  const Index ij = s.e.cols() * s.f.cols();
  Matrix p(samples.n(), ij);
  parallel_for(samples.n(), [&](Index n) {
    const Matrix c = s.e.transpose() * samples.sample(n) * s.f;
    for (Index i = 0; i < c.rows(); ++i)
      for (Index j = 0; j < c.cols(); ++j) p(n, i * c.cols() + j) = c(i, j);
  });
  return p;
}

// <u, D u> for every u = e_i f_j^T, D = C_hat(w) - fit.
Vector diagonal_terms(const Matrix& proj, const Vector& w, bool center, const SepPlusBandedCov& fit,
                      const GofSubspace& s) {
  const double total = w.sum();
  const Index jd = s.f.cols();
  const Vector sep1 = (s.e.transpose() * fit.a1.matrix() * s.e).diagonal();
  const Vector sep2 = (s.f.transpose() * fit.a2.matrix() * s.f).diagonal();
  const ModelOperator op(fit);
  Vector t(proj.cols());
  for (Index c = 0; c < proj.cols(); ++c) {
    const auto col = proj.col(c);
    double second = w.dot(col.cwiseProduct(col)) / total;
    if (center) {
      const double m = w.dot(col) / total;
      second -= m * m;
    }
    const Index i = c / jd;
    const Index j = c % jd;
    double banded = 0.0;
    if (fit.kind() != BandedKind::none) {
      const Matrix u = s.e.col(i) * s.f.col(j).transpose();
      banded = u.cwiseProduct(op.apply_banded(u)).sum();
    }
    t(c) = second - sep1(i) * sep2(j) - banded;
  }
  return t;
}

}  // namespace

double gof_statistic(const SampleStack& samples, const SepPlusBandedCov& fit, const GofConfig& cfg) {
  if (samples.k1() != fit.k1() || samples.k2() != fit.k2()) throw ShapeMismatch("gof: fit does not match the samples");
  const GofSubspace s = gof_subspace(fit, cfg.i_dims, cfg.j_dims);
  const Vector t = diagonal_terms(projections(samples, s), Vector::Ones(samples.n()), cfg.estimate.center, fit, s);
  return t.squaredNorm();
}

GofResult gof_test(const SampleStack& samples, const GofConfig& cfg) {
  if (cfg.n_boot < 1) throw ShapeMismatch("gof: n_boot must be >= 1");
  const Index n = samples.n();
  GofResult out;
  out.fit = estimate_full(samples, cfg.d, cfg.estimate);
  const GofSubspace sub = gof_subspace(out.fit, cfg.i_dims, cfg.j_dims);
  const Matrix proj = projections(samples, sub);
  const Vector ones = Vector::Ones(n);
  const Vector t0 = diagonal_terms(proj, ones, cfg.estimate.center, out.fit, sub);
  out.statistic = t0.squaredNorm();

  std::vector<MomentSums> per_sample(static_cast<std::size_t>(n));
  parallel_for(n, [&](Index i) {
    per_sample[static_cast<std::size_t>(i)] =
        MomentSums::of_sample(Matrix(samples.sample(i)), cfg.d, cfg.estimate.kind);
  });
  const MomentSums zero = MomentSums::zero(samples.k1(), samples.k2(), cfg.d, cfg.estimate.kind);

  const Index cap = 10 * cfg.n_boot;
  std::atomic<Index> attempts{0};
  std::atomic<bool> exhausted{false};
  out.boot.assign(static_cast<std::size_t>(cfg.n_boot), 0.0);
  parallel_for(cfg.n_boot, [&](Index b) {
    for (std::uint32_t a = 0;; ++a) {
      if (exhausted.load()) return;
      if (attempts.fetch_add(1) >= cap) {
        exhausted = true;
        return;
      }
      Philox rng(cfg.seed, static_cast<std::uint32_t>(b), a);
      Vector w = Vector::Zero(n);
      for (Index k = 0; k < n; ++k) w(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)))) += 1.0;
      MomentSums m = zero;
      for (Index k = 0; k < n; ++k)
        if (w(k) != 0.0) m.add_scaled(per_sample[static_cast<std::size_t>(k)], w(k));
      try {
        const SepPlusBandedCov star = estimate_from_moments(m, cfg.estimate);
        double stat;
        if (cfg.recompute_subspace) {
          const GofSubspace s2 = gof_subspace(star, cfg.i_dims, cfg.j_dims);
          const Matrix p2 = projections(samples, s2);
          stat = (diagonal_terms(p2, ones, cfg.estimate.center, out.fit, s2) -
                  diagonal_terms(p2, w, cfg.estimate.center, star, s2))
                     .squaredNorm();
        } else {
          stat = (t0 - diagonal_terms(proj, w, cfg.estimate.center, star, sub)).squaredNorm();
        }
        out.boot[static_cast<std::size_t>(b)] = stat;
        return;
      } catch (const DegenerateTrace&) {
      } catch (const RankError&) {
      }
    }
  });
  if (exhausted) throw DegenerateTrace(cfg.d.d);
  out.redraws = attempts.load() - cfg.n_boot;

  Index exceed = 0;
  for (double v : out.boot)
    if (v > out.statistic) ++exceed;
  out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(cfg.n_boot + 1);
  return out;
}

}  // namespace sptcov
