#include <doctest.h>

#include "../oracle/dense_oracle.hpp"
#include "sptcov/stationary.hpp"
#include "sptcov/tracing.hpp"

using namespace sptcov;

TEST_SUITE("stationary") {
  TEST_CASE("topavg_sample on the 2x2 example") {
    Matrix x(2, 2);
    x << 1, 2, 3, 4;
    for (const auto& s : {topavg_sample(x), topavg_sample_direct(x)}) {
      CHECK(s(0, 0) == doctest::Approx(7.5));
      CHECK(s(0, 1) == doctest::Approx(3.5));
      CHECK(s(1, 0) == doctest::Approx(2.75));
      CHECK(s(1, 1) == doctest::Approx(1.0));
      CHECK(s(1, -1) == doctest::Approx(1.5));
      CHECK(s(-1, 1) == doctest::Approx(1.5));
      CHECK(s(-1, 0) == doctest::Approx(2.75));
    }
    CHECK(topavg_sample(Matrix::Zero(3, 4)).lags().isZero(0.0));
  }

  TEST_CASE("topavg: FFT path, direct path and dense tensor agree") {
    oracle::Rng rng(21);
    const Matrix x = rng.gauss(7, 6);
    const StationarySymbol f = topavg_sample(x);
    CHECK(oracle::rel(f.lags(), topavg_sample_direct(x).lags()) < 1e-10);
    CHECK(oracle::rel(f.lags(), oracle::topavg(oracle::outer(x))) < 1e-10);
    // grid sizes whose embedding length is prime or smooth
    for (Index k : {1, 2, 10, 13, 50}) {
      const Matrix y = rng.gauss(k, k + 1);
      CHECK(oracle::rel(topavg_sample(y).lags(), topavg_sample_direct(y).lags()) < 1e-10);
    }
  }

  TEST_CASE("topavg_separable") {
    const StationarySymbol id = topavg_separable(SymMatrix::identity(2), SymMatrix::identity(2));
    CHECK(id(0, 0) == doctest::Approx(1.0));
    CHECK(id(1, 0) == 0.0);
    CHECK(id(1, 1) == 0.0);
    const Matrix ones = Matrix::Ones(2, 2);
    const StationarySymbol r1 = topavg_separable(ones, ones);
    for (Index h = -1; h <= 1; ++h)
      for (Index l = -1; l <= 1; ++l)
        CHECK(r1(h, l) == doctest::Approx((2.0 - std::abs(h)) * (2.0 - std::abs(l)) / 4.0));
    oracle::Rng rng(22);
    const Matrix a1 = rng.spd(5), a2 = rng.spd(5);
    CHECK(oracle::rel(topavg_separable(a1, a2).lags(), oracle::topavg(oracle::separable(a1, a2))) < 1e-10);
  }

  TEST_CASE("topavg_stack") {
    oracle::Rng rng(23);
    const auto xs = rng.samples(4, 5, 5);
    SampleStack st(xs);
    const Matrix a1 = rng.spd(5), a2 = rng.spd(5);
    const StationarySymbol s = topavg_stack(st, SymMatrix(a1), SymMatrix(a2));
    const Matrix want = oracle::topavg(oracle::diff(oracle::ecov(xs, false), oracle::separable(a1, a2)));
    CHECK(oracle::rel(s.lags(), want) < 1e-10);

    Matrix mean_lags = Matrix::Zero(9, 9);
    for (const auto& x : xs) mean_lags += topavg_sample(x).lags() / 4.0;
    CHECK(oracle::rel(topavg_stack(st, SymMatrix::zero(5), SymMatrix::zero(5)).lags(), mean_lags) < 1e-12);

    SampleStack zero({Matrix::Zero(5, 5), Matrix::Zero(5, 5)});
    CHECK(oracle::rel(topavg_stack(zero, SymMatrix(a1), SymMatrix(a2)).lags(),
                      Matrix(-topavg_separable(a1, a2).lags())) < 1e-12);
    const StationarySymbol clipped = topavg_stack(st, SymMatrix(a1), SymMatrix(a2), Bandwidth{2});
    CHECK(clipped.band() == std::optional<Index>(2));
    CHECK(clipped(2, 0) == 0.0);
    CHECK(clipped(1, -1) == s(1, -1));
  }

  TEST_CASE("topavg is idempotent on the dense path") {
    oracle::Rng rng(24);
    const CovTensor4 t = oracle::outer(rng.gauss(4, 3));
    const StationarySymbol once = topavg_tensor(t);
    const StationarySymbol twice = topavg_tensor(stationary_tensor(once));
    // the 1/K^2 divisor shrinks the lags: the second pass reproduces
    // (K1-|h|)(K2-|l|)/(K1 K2) times the first
    for (Index h = -3; h <= 3; ++h)
      for (Index l = -2; l <= 2; ++l)
        CHECK(twice(h, l) == doctest::Approx(once(h, l) * (4.0 - std::abs(h)) * (3.0 - std::abs(l)) / 12.0));
  }

  TEST_CASE("apply_stationary") {
    oracle::Rng rng(25);
    const Matrix x = rng.gauss(4, 5);
    CHECK(oracle::rel(apply_stationary(StationarySymbol::delta(4, 5, 2.5), x), Matrix(2.5 * x)) < 1e-13);

    StationarySymbol nb(4, 4);
    nb.set(0, 1, 1.0);
    const Matrix y = apply_stationary(nb, Matrix::Ones(4, 4));
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) CHECK(y(i, j) == doctest::Approx((j > 0) + (j < 3)));

    const StationarySymbol s = rng.symbol(6, 6, 6);
    const Matrix z = rng.gauss(6, 6);
    CHECK(oracle::rel(apply_stationary(s, z), apply_stationary_direct(s, z)) < 1e-10);
    CHECK(oracle::rel(apply_stationary(s, z), oracle::apply(oracle::stationary(s), z)) < 1e-10);
    const Matrix w = rng.gauss(6, 6);
    CHECK(oracle::inner(apply_stationary(s, z), w) == doctest::Approx(oracle::inner(z, apply_stationary(s, w))));
    CHECK(oracle::rel(apply_stationary(s, Matrix(2.0 * z + w)),
                      Matrix(2.0 * apply_stationary(s, z) + apply_stationary(s, w))) < 1e-12);
    CHECK_THROWS_AS(apply_stationary(s, Matrix::Zero(5, 6)), ShapeMismatch);
  }

  TEST_CASE("band preservation of apply") {
    oracle::Rng rng(26);
    const StationarySymbol s = rng.symbol(7, 7, 3).band_clipped(Bandwidth{3});
    Matrix e = Matrix::Zero(7, 7);
    e(3, 2) = 1.0;
    const Matrix y = apply_stationary(s, e);
    for (Index i = 0; i < 7; ++i)
      for (Index j = 0; j < 7; ++j)
        if (std::max(std::abs(i - 3), std::abs(j - 2)) >= 3) CHECK(std::abs(y(i, j)) < 1e-14);
  }

  TEST_CASE("symbol invariants") {
    oracle::Rng rng(27);
    const StationarySymbol s = rng.symbol(4, 3, 4);
    CHECK(s.centrally_symmetric());
    const StationarySymbol c = s.band_clipped(Bandwidth{2});
    for (Index h = -3; h <= 3; ++h)
      for (Index l = -2; l <= 2; ++l)
        if (std::max(std::abs(h), std::abs(l)) >= 2) CHECK(c(h, l) == 0.0);
    CHECK_THROWS_AS(StationarySymbol(0, 3), ShapeMismatch);
  }

  TEST_CASE("circulant spectrum: naive DFT and delta reproduction") {
    oracle::Rng rng(28);
    const StationarySymbol s = rng.symbol(3, 4, 4);
    const CirculantSpectrum sp = circulant_spectrum(s);
    CHECK(oracle::rel(sp.eigenvalues, oracle::symbol_spectrum(s.lags(), 3, 4)) < 1e-10);
    // the embedding applied to a padded delta at the origin reads back the symbol
    Matrix e = Matrix::Zero(3, 4);
    e(0, 0) = 1.0;
    const Matrix col = apply_stationary(s, e);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 4; ++j) CHECK(col(i, j) == doctest::Approx(s(-i, -j)));
  }

  TEST_CASE("psd_project_symbol") {
    oracle::Rng rng(29);
    const StationarySymbol p = topavg_sample(rng.gauss(5, 4));
    CHECK(oracle::rel(psd_project_symbol(p).lags(), p.lags()) < 1e-10);

    StationarySymbol neg(3, 3);
    neg.set(0, 1, 1.0);
    CHECK(circulant_spectrum(neg).min() < -0.5);
    const StationarySymbol q = psd_project_symbol(neg);
    CHECK(oracle::rel(q.lags(), neg.lags()) > 0.1);
    CHECK(circulant_spectrum(q).min() >= -1e-10);
    CHECK(oracle::rel(q.lags(), oracle::psd_symbol(neg.lags(), 3, 3)) < 1e-10);
    CHECK(oracle::rel(psd_project_symbol(q).lags(), q.lags()) < 1e-10);
    CHECK(psd_project_symbol(StationarySymbol(3, 2)).lags().isZero(0.0));
  }

  TEST_CASE("symbol_fro_norm") {
    CHECK(symbol_fro_norm(StationarySymbol::delta(4, 5, 3.0)) == doctest::Approx(3.0 * std::sqrt(20.0)));
    CHECK(symbol_fro_norm(StationarySymbol(3, 3)) == 0.0);
    oracle::Rng rng(30);
    const StationarySymbol s = rng.symbol(5, 5, 5);
    CHECK(oracle::rel(symbol_fro_norm(s), oracle::fro(oracle::stationary(s))) < 1e-12);
  }
}
