#include <doctest.h>

#include "../oracle/dense_oracle.hpp"
#include "sptcov/tracing.hpp"

using namespace sptcov;

namespace {

Matrix m22() {
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  return x;
}

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_SUITE("tracing") {
  TEST_CASE("spt1 on the 2x2 example") {
    CHECK(spt1_sample(m22(), Bandwidth{0}) == mat({{5, 11}, {11, 25}}));
    CHECK(spt1_sample(m22(), Bandwidth{1}) == mat({{2, 4}, {6, 12}}));
    CHECK(spt1_sample(m22(), Bandwidth{2}).isZero(0.0));
  }

  TEST_CASE("spt2 on the 2x2 example") {
    CHECK(spt2_sample(m22(), Bandwidth{0}) == mat({{10, 14}, {14, 20}}));
    CHECK(spt2_sample(m22(), Bandwidth{1}) == mat({{3, 4}, {6, 8}}));
    CHECK(spt2_sample(m22(), Bandwidth{2}).isZero(0.0));
  }

  TEST_CASE("strace on the 2x2 example") {
    CHECK(strace_sample(m22(), Bandwidth{0}) == 30.0);
    CHECK(strace_sample(m22(), Bandwidth{1}) == 4.0);
    CHECK(strace_sample(m22(), Bandwidth{2}) == 0.0);
  }

  TEST_CASE("bandwidth beyond the grid is rejected") {
    Matrix x = Matrix::Ones(3, 2);
    CHECK_THROWS_AS(spt1_sample(x, Bandwidth{3}), BandwidthOutOfRange);
    CHECK_THROWS_AS(spt2_sample(x, Bandwidth{4}), BandwidthOutOfRange);
    CHECK_THROWS_AS(strace_sample(x, Bandwidth{-1}), BandwidthOutOfRange);
    CHECK_NOTHROW(spt2_sample(x, Bandwidth{3}));
  }

  TEST_CASE("stack ops: single sample, {x,-x} and the dense oracle") {
    oracle::Rng rng(11);
    const Matrix x = rng.gauss(4, 5);
    SampleStack one({x});
    CHECK(oracle::rel(spt1_stack(one, Bandwidth{2}), spt1_sample(x, Bandwidth{2})) == doctest::Approx(0.0));
    SampleStack pm({x, Matrix(-x)});
    CHECK(oracle::rel(spt2_stack(pm, Bandwidth{1}), spt2_sample(x, Bandwidth{1})) < 1e-14);
    CHECK(oracle::rel(strace_stack(pm, Bandwidth{1}), strace_sample(x, Bandwidth{1})) < 1e-14);

    const auto xs = rng.samples(3, 5, 5);
    SampleStack st(xs);
    const CovTensor4 t = oracle::ecov(xs, false);
    for (Index d = 0; d <= 5; ++d) {
      CHECK(oracle::rel(spt1_stack(st, Bandwidth{d}), oracle::spt1(t, d)) < 1e-12);
      CHECK(oracle::rel(spt2_stack(st, Bandwidth{d}), oracle::spt2(t, d)) < 1e-12);
      if (d < 5) CHECK(oracle::rel(strace_stack(st, Bandwidth{d}), oracle::strace(t, d)) < 1e-12);
    }
  }

  TEST_CASE("per-sample ops agree with the tensor ops on x (x) x for random shapes") {
    oracle::Rng rng(12);
    for (int rep = 0; rep < 30; ++rep) {
      const Index k1 = rng.index(1, 8), k2 = rng.index(1, 8);
      const Matrix x = rng.gauss(k1, k2);
      const CovTensor4 t = outer_tensor(x);
      for (Index d = 0; d <= std::min(k1, k2); ++d) {
        CHECK(oracle::rel(spt1_sample(x, Bandwidth{d}), spt_tensor(t, Bandwidth{d}, Axis::first)) < 1e-12);
        CHECK(oracle::rel(spt2_sample(x, Bandwidth{d}), spt_tensor(t, Bandwidth{d}, Axis::second)) < 1e-12);
        const double s = strace_tensor(t, Bandwidth{d});
        CHECK(std::abs(strace_sample(x, Bandwidth{d}) - s) <= 1e-12 * std::max(1.0, std::abs(s)));
        CHECK(oracle::rel(spt_tensor(t, Bandwidth{d}, Axis::first), oracle::spt1(t, d)) < 1e-13);
      }
    }
  }

  TEST_CASE("linearity over concatenated stacks") {
    oracle::Rng rng(13);
    SampleStack a(rng.samples(3, 4, 6)), b(rng.samples(5, 4, 6));
    SampleStack ab = SampleStack::concat(a, b);
    const Matrix want = (3.0 * spt1_stack(a, Bandwidth{2}) + 5.0 * spt1_stack(b, Bandwidth{2})) / 8.0;
    CHECK(oracle::rel(spt1_stack(ab, Bandwidth{2}), want) < 1e-12);
  }

  TEST_CASE("separable tensor: the shifted-trace factorization") {
    oracle::Rng rng(14);
    const Matrix a1 = rng.spd(5), a2 = rng.spd(4);
    const CovTensor4 t = separable_tensor(a1, a2);
    CHECK(oracle::rel(t, oracle::separable(a1, a2)) == 0.0);
    CHECK(t.fro_norm() == doctest::Approx(a1.norm() * a2.norm()).epsilon(1e-13));
    for (Index d = 0; d < 4; ++d) {
      const double s1 = shifted_trace(a1, Bandwidth{d}), s2 = shifted_trace(a2, Bandwidth{d});
      CHECK(oracle::rel(strace_tensor(t, Bandwidth{d}), s1 * s2) < 1e-10);
      CHECK(oracle::rel(spt_tensor(t, Bandwidth{d}, Axis::first), Matrix(s2 * a1)) < 1e-10);
      CHECK(oracle::rel(spt_tensor(t, Bandwidth{d}, Axis::second), Matrix(s1 * a2)) < 1e-10);
    }
    Matrix two(1, 1), three(1, 1);
    two << 2;
    three << 3;
    CHECK(separable_tensor(two, three)(0, 0, 0, 0) == 6.0);
    const CovTensor4 id = separable_tensor(SymMatrix::identity(2), SymMatrix::identity(2));
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j)
        for (Index k = 0; k < 2; ++k)
          for (Index l = 0; l < 2; ++l) CHECK(id(i, j, k, l) == (i == k && j == l ? 1.0 : 0.0));
  }

  TEST_CASE("annihilation of banded tensors at d >= band") {
    oracle::Rng rng(15);
    for (int rep = 0; rep < 20; ++rep) {
      const Index k1 = rng.index(2, 7), k2 = rng.index(2, 7);
      const Index band = rng.index(1, std::min(k1, k2));
      CovTensor4 t(k1, k2);
      for (Index i = 0; i < k1; ++i)
        for (Index j = 0; j < k2; ++j)
          for (Index k = 0; k < k1; ++k)
            for (Index l = 0; l < k2; ++l)
              if (std::max(std::abs(i - k), std::abs(j - l)) < band) t(i, j, k, l) = rng.normal();
      for (Index d = band; d <= std::min(k1, k2); ++d) {
        CHECK(spt_tensor(t, Bandwidth{d}, Axis::first).isZero(0.0));
        CHECK(spt_tensor(t, Bandwidth{d}, Axis::second).isZero(0.0));
        CHECK(strace_tensor(t, Bandwidth{d}) == 0.0);
      }
    }
  }

  TEST_CASE("zero tensor traces to zero") {
    CovTensor4 t(3, 3);
    CHECK(spt_tensor(t, Bandwidth{1}, Axis::first).isZero(0.0));
    CHECK(strace_tensor(t, Bandwidth{0}) == 0.0);
  }

  TEST_CASE("symmetrize") {
    CHECK(symmetrize(mat({{0, 2}, {0, 0}})).matrix() == mat({{0, 1}, {1, 0}}));
    const Matrix s = mat({{1, 2}, {2, 5}});
    CHECK(symmetrize(s).matrix() == s);
    const Matrix r = mat({{1, 7}, {-3, 2}});
    CHECK(symmetrize(symmetrize(r).matrix()).matrix() == symmetrize(r).matrix());
  }

  TEST_CASE("bandwidth from a continuous fraction and the oracle cap") {
    CHECK(Bandwidth::from_fraction(0.1, 100).d == 11);
    CHECK(Bandwidth::from_fraction(0.0, 50).d == 1);
    CHECK_THROWS_AS(CovTensor4(20, 20), OracleCapExceeded);
    CHECK_NOTHROW(CovTensor4(16, 16));
  }
}
