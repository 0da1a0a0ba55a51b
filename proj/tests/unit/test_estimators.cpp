#include <doctest.h>

#include <algorithm>

#include "../oracle/dense_oracle.hpp"
#include "sptcov/estimators.hpp"
#include "sptcov/simgen.hpp"

using namespace sptcov;

namespace {

EstimateOptions opts(BandedKind kind, bool center = true, bool psd = true) {
  EstimateOptions o;
  o.kind = kind;
  o.center = center;
  o.psd = psd;
  return o;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("rank-one sample is reproduced at d = 0") {
    oracle::Rng rng(31);
    const Matrix u = rng.gauss(4, 1), v = rng.gauss(5, 1);
    const Matrix x = u * v.transpose();
    SampleStack st({x});
    const auto s = estimate_separable(st, Bandwidth{0}, opts(BandedKind::none, false));
    CHECK(oracle::rel(separable_tensor(s.a1, s.a2), oracle::outer(x)) < 1e-10);
    // a1 ∝ u u^T
    const Matrix uu = u * u.transpose();
    CHECK(oracle::rel(Matrix(s.a1.matrix() * (uu.norm() / s.a1.fro_norm())), uu) < 1e-10);
  }

  TEST_CASE("population pipeline recovers the separable part") {
    oracle::Rng rng(32);
    const Matrix a1 = rng.spd(8), a2 = rng.spd(8);
    const CovTensor4 t = oracle::separable(a1, a2);
    for (Index d = 0; d < 8; ++d) {
      const auto c = estimate_full_tensor(t, Bandwidth{d}, opts(BandedKind::none));
      CHECK(oracle::rel(separable_tensor(c.a1, c.a2), t) < 1e-10);
    }
  }

  TEST_CASE("all-zero samples: degenerate trace naming d") {
    SampleStack z({Matrix::Zero(3, 3), Matrix::Zero(3, 3)});
    CHECK_THROWS_AS(estimate_separable(z, Bandwidth{1}), DegenerateTrace);
    try {
      estimate_full(z, Bandwidth{2});
    } catch (const DegenerateTrace& e) {
      CHECK(std::string(e.what()).find('2') != std::string::npos);
    }
  }

  TEST_CASE("banded kind none leaves the banded field empty") {
    oracle::Rng rng(33);
    SampleStack st(rng.samples(6, 4, 4));
    const auto c = estimate_full(st, Bandwidth{1}, opts(BandedKind::none));
    CHECK(c.kind() == BandedKind::none);
    CHECK(c.symbol() == nullptr);
    CHECK(c.banded_tensor() == nullptr);
  }

  TEST_CASE("d = 1 banded kind collapses to the variance residual map") {
    oracle::Rng rng(34);
    const auto xs = rng.samples(7, 5, 4);
    SampleStack st(xs);
    const auto c = estimate_full(st, Bandwidth{1}, opts(BandedKind::banded, false));
    const BandedTensor& b = *c.banded_tensor();
    CHECK(b.width() == 1);
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 4; ++j) {
        double m2 = 0.0;
        for (const auto& x : xs) m2 += x(i, j) * x(i, j) / 7.0;
        CHECK(b(i, j, 0, 0) == doctest::Approx(m2 - c.a1(i, i) * c.a2(j, j)).epsilon(1e-12));
      }
  }

  TEST_CASE("full pipeline against the dense oracle") {
    oracle::Rng rng(35);
    for (bool center : {true, false})
      for (bool psd : {true, false})
        for (BandedKind kind : {BandedKind::stationary, BandedKind::banded, BandedKind::none})
          for (Index d : {1, 2, 4}) {
            const auto xs = rng.samples(5, 6, 6);
            const auto c = estimate_full(SampleStack(xs), Bandwidth{d}, opts(kind, center, psd));
            const auto f = oracle::estimate(oracle::ecov(xs, center), d, kind, psd);
            CAPTURE(center);
            CAPTURE(psd);
            CAPTURE(d);
            CHECK(oracle::rel(oracle::model(c), f.full) < 1e-10);
            CHECK(oracle::rel(estimate_full_tensor(oracle::ecov(xs, center), Bandwidth{d}, opts(kind, center, psd)).to_dense(),
                              f.full) < 1e-10);
          }
  }

  TEST_CASE("PT equals d = 0 separable estimation") {
    oracle::Rng rng(36);
    SampleStack st(rng.samples(6, 4, 5));
    const auto a = baseline_pt(st);
    const auto b = estimate_separable(st, Bandwidth{0});
    CHECK(oracle::rel(a.a1.matrix(), b.a1.matrix()) == 0.0);
    CHECK(oracle::rel(a.a2.matrix(), b.a2.matrix()) == 0.0);
  }

  TEST_CASE("PT error shrinks with N on separable data") {
    std::vector<double> med;
    for (Index n : {50, 200, 800}) {
      std::vector<double> errs;
      for (std::uint32_t rep = 0; rep < 7; ++rep) {
        SimConfig s;
        s.k = 10;
        s.n = n;
        s.tau = 1.0;
        s.seed = 36;
        s.rep = rep;
        const Simulation sim = simulate(s);
        errs.push_back(rel_error(as_model(baseline_pt(sim.samples)), sim.truth));
      }
      med.push_back(median(errs));
    }
    CHECK(med[0] > med[1]);
    CHECK(med[1] > med[2]);
  }

  TEST_CASE("PT plateaus above SPT d=1 under white noise") {
    SimConfig s;
    s.k = 16;
    s.n = 800;
    s.tau = 256.0;
    s.noise_sigma2 = 1.0;
    s.seed = 37;
    const Simulation sim = simulate(s);
    const double spt = rel_error(estimate_full(sim.samples, Bandwidth{1}), sim.truth);
    const double pt = rel_error(as_model(baseline_pt(sim.samples)), sim.truth);
    CHECK(spt < pt);
  }

  TEST_CASE("NKP: rank-one fixed point, SVD oracle, monotone objective") {
    oracle::Rng rng(38);
    const Matrix u = rng.gauss(4, 1), v = rng.gauss(3, 1);
    const Matrix x = u * v.transpose();
    const NkpResult r = baseline_nkp(SampleStack({x}), 100, 1e-10, false);
    CHECK(r.converged);
    CHECK(r.iterations <= 2);
    CHECK(oracle::rel(separable_tensor(r.a1, r.a2), oracle::outer(x)) < 1e-10);

    const auto xs = rng.samples(3, 4, 4);
    const CovTensor4 c = oracle::ecov(xs, true);
    const NkpResult n = baseline_nkp(SampleStack(xs), 500, 1e-14);
    CHECK(oracle::rel(separable_tensor(n.a1, n.a2), oracle::nkp(c)) < 1e-8);

    double prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= 8; ++it) {
      const NkpResult p = baseline_nkp(SampleStack(xs), it, 0.0);
      const double obj = oracle::fro(oracle::diff(c, oracle::separable(p.a1.matrix(), p.a2.matrix())));
      CHECK(obj <= prev * (1.0 + 1e-12));
      prev = obj;
    }
    // starting again from the fixed point changes nothing
    const NkpResult again = baseline_nkp(SampleStack(xs), 1000, 1e-14);
    CHECK(oracle::rel(separable_tensor(again.a1, again.a2), separable_tensor(n.a1, n.a2)) < 1e-10);
  }

  TEST_CASE("NKP of a structured model matches the SVD oracle") {
    oracle::Rng rng(39);
    SepPlusBandedCov c{SymMatrix(rng.spd(5)), SymMatrix(rng.spd(4)), rng.symbol(5, 4, 2), Bandwidth{2}, false};
    const NkpResult r = nkp_model(c, 500, 1e-14);
    CHECK(oracle::rel(separable_tensor(r.a1, r.a2), oracle::nkp(oracle::model(c))) < 1e-8);
  }

  TEST_CASE("empirical covariance") {
    Matrix x(2, 2), y(2, 2);
    x << 1, 2, 3, 4;
    y << 0, -1, 2, 1;
    CHECK(oracle::rel(empirical_cov(SampleStack({x}), false), oracle::outer(x)) == 0.0);
    const CovTensor4 c = empirical_cov(SampleStack({x, y}), false);
    CHECK(c(0, 0, 0, 0) == doctest::Approx(0.5));   // (1 + 0) / 2
    CHECK(c(0, 1, 1, 0) == doctest::Approx(2.0));   // (2*3 + -1*2) / 2
    CHECK(c(1, 1, 1, 1) == doctest::Approx(8.5));   // (16 + 1) / 2
    CHECK(c.is_symmetric());
    const CovTensor4 cc = empirical_cov(SampleStack({x, y}), true);
    CHECK(cc(0, 0, 0, 0) == doctest::Approx(0.25));
  }

  TEST_CASE("psd_project_matrix") {
    oracle::Rng rng(40);
    const Matrix a = rng.spd(5);
    CHECK(oracle::rel(psd_project_matrix(SymMatrix(a)).matrix(), a) < 1e-10);
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = -1.0;
    Matrix want = Matrix::Zero(2, 2);
    want(0, 0) = 1.0;
    CHECK(oracle::rel(psd_project_matrix(SymMatrix(d)).matrix(), want) < 1e-12);
    CHECK(oracle::rel(psd_project_matrix(SymMatrix(Matrix(-a))).matrix(), a) < 1e-10);
    CHECK(psd_project_matrix(SymMatrix(Matrix(-a)), false).matrix().isZero(1e-12));
  }

  TEST_CASE("relative error: structured, dense and empirical") {
    oracle::Rng rng(41);
    SepPlusBandedCov t{SymMatrix(rng.spd(6)), SymMatrix(rng.spd(6)), rng.symbol(6, 6, 3), Bandwidth{3}, false};
    CHECK(rel_error(t, t) < 1e-7);
    SepPlusBandedCov zero{SymMatrix::zero(6), SymMatrix::zero(6), std::monostate{}, Bandwidth{0}, false};
    CHECK(rel_error(zero, t) == doctest::Approx(1.0));
    BandedTensor bt(6, 6, Bandwidth{2});
    for (auto& v : bt.raw()) v = rng.normal();
    SepPlusBandedCov e{SymMatrix(rng.spd(6)), SymMatrix(rng.spd(6)), bt, Bandwidth{2}, true};
    const double want = oracle::rel(oracle::model(e), oracle::model(t));
    CHECK(oracle::rel(rel_error(e, t), want) < 1e-10);
    CHECK(oracle::rel(rel_error(oracle::model(e), t), want) < 1e-10);

    const auto xs = rng.samples(5, 6, 6);
    for (bool center : {true, false}) {
      const CovTensor4 ec = oracle::ecov(xs, center);
      CHECK(oracle::rel(empirical_rel_error(SampleStack(xs), t, center), oracle::rel(ec, oracle::model(t))) < 1e-10);
      const double d2 = std::pow(oracle::fro(oracle::diff(ec, oracle::model(t))), 2);
      CHECK(oracle::rel(empirical_distance2(SampleStack(xs), t, center), d2) < 1e-10);
    }
  }

  TEST_CASE("scale invariance of the product") {
    oracle::Rng rng(42);
    const auto xs = rng.samples(6, 5, 5);
    std::vector<Matrix> ys;
    for (const auto& x : xs) ys.push_back(3.0 * x);
    const auto a = estimate_separable(SampleStack(xs), Bandwidth{1});
    const auto b = estimate_separable(SampleStack(ys), Bandwidth{1});
    CovTensor4 ta = separable_tensor(a.a1, a.a2);
    ta *= 9.0;
    CHECK(oracle::rel(separable_tensor(b.a1, b.a2), ta) < 1e-10);
  }

  TEST_CASE("annihilation end to end at population level") {
    oracle::Rng rng(43);
    const Matrix a1 = rng.spd(7), a2 = rng.spd(7);
    const StationarySymbol s = rng.symbol(7, 7, 3).band_clipped(Bandwidth{3});
    CovTensor4 t = oracle::separable(a1, a2);
    t += oracle::stationary(s);
    const CovTensor4 sep = oracle::separable(a1, a2);
    for (Index d = 3; d < 7; ++d) {
      for (BandedKind kind : {BandedKind::stationary, BandedKind::banded}) {
        const auto c = estimate_full_tensor(t, Bandwidth{d}, opts(kind, true, false));
        CHECK(oracle::rel(separable_tensor(c.a1, c.a2), sep) < 1e-10);
      }
      // the local kind sees the residual exactly
      const auto c = estimate_full_tensor(t, Bandwidth{d}, opts(BandedKind::banded, true, false));
      CHECK(oracle::rel(oracle::model(c), t) < 1e-10);
    }
  }

  TEST_CASE("stationary kind returns the Toeplitz-shrunk symbol") {
    oracle::Rng rng(44);
    const Index k = 6;
    const StationarySymbol s = rng.symbol(k, k, 2).band_clipped(Bandwidth{2});
    CovTensor4 t = oracle::separable(rng.spd(k), rng.spd(k));
    t += oracle::stationary(s);
    const auto c = estimate_full_tensor(t, Bandwidth{2}, opts(BandedKind::stationary, true, false));
    const StationarySymbol& got = *c.symbol();
    for (Index h = -(k - 1); h < k; ++h)
      for (Index l = -(k - 1); l < k; ++l) {
        const double w = double(k - std::abs(h)) * double(k - std::abs(l)) / double(k * k);
        CHECK(got(h, l) == doctest::Approx(s(h, l) * w).epsilon(1e-10));
      }
  }

  TEST_CASE("moment sums: folds by subtraction equal direct subsets") {
    oracle::Rng rng(45);
    const auto xs = rng.samples(9, 5, 4);
    SampleStack st(xs);
    for (BandedKind kind : {BandedKind::stationary, BandedKind::banded}) {
      const MomentSums total = accumulate_moments(st, Bandwidth{2}, kind);
      MomentSums fold = MomentSums::zero(5, 4, Bandwidth{2}, kind);
      std::vector<Index> keep;
      for (Index n = 0; n < 9; ++n) {
        if (n % 3 == 0)
          fold += MomentSums::of_sample(xs[static_cast<std::size_t>(n)], Bandwidth{2}, kind);
        else
          keep.push_back(n);
      }
      MomentSums held = total;
      held -= fold;
      const auto a = estimate_from_moments(held, opts(kind));
      const auto b = estimate_full(st.subset(keep), Bandwidth{2}, opts(kind));
      CHECK(oracle::rel(oracle::model(a), oracle::model(b)) < 1e-10);
      // weights 2 on one sample = the sample repeated
      MomentSums w = MomentSums::zero(5, 4, Bandwidth{2}, kind);
      w.add_scaled(MomentSums::of_sample(xs[0], Bandwidth{2}, kind), 2.0);
      w += MomentSums::of_sample(xs[1], Bandwidth{2}, kind);
      const std::vector<Index> rep{0, 0, 1};
      CHECK(oracle::rel(oracle::model(estimate_from_moments(w, opts(kind))),
                        oracle::model(estimate_full(st.subset(rep), Bandwidth{2}, opts(kind)))) < 1e-10);
    }
  }

  TEST_CASE("canonical rescaling keeps the operator") {
    oracle::Rng rng(46);
    SepPlusBandedCov c{SymMatrix(rng.spd(4)), SymMatrix(rng.spd(4)), std::monostate{}, Bandwidth{0}, true};
    const SepPlusBandedCov k = c.canonical();
    CHECK(k.a1.fro_norm() == doctest::Approx(1.0));
    CHECK(oracle::rel(oracle::model(k), oracle::model(c)) < 1e-12);
  }
}
