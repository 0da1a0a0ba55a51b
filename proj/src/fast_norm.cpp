#include "sptcov/fast_norm.hpp"

#include <algorithm>
#include <cmath>

namespace sptcov {

void append_terms(std::vector<NormTerm>& terms, const SepPlusBandedCov& c, double coef) {
  terms.push_back(NormTerm::separable(c.a1, c.a2, coef));
  if (const auto* s = c.symbol()) terms.push_back(NormTerm::stationary(*s, coef));
  if (const auto* b = c.banded_tensor()) terms.push_back(NormTerm::banded(*b, coef));
}

namespace {

// Columns: p-th diagonal of every factor (zero-padded to length k), then the
// indicator of the rows where lag p stays on the grid.
Matrix diagonal_columns(const std::vector<const Matrix*>& factors, Index k, Index p) {
  const Index r = static_cast<Index>(factors.size());
  Matrix out = Matrix::Zero(k, r + 1);
  for (Index i = std::max<Index>(0, -p); i < std::min(k, k - p); ++i) {
    for (Index c = 0; c < r; ++c) out(i, c) = (*factors[static_cast<std::size_t>(c)])(i, i + p);
    out(i, r) = 1.0;
  }
  return out;
}

}  // namespace

double structured_fro_norm2(std::span<const NormTerm> terms) {
  if (terms.empty()) return 0.0;

  std::vector<const Matrix*> left;
  std::vector<const Matrix*> right;
  std::vector<double> sep_coef;
  std::vector<std::pair<double, const StationarySymbol*>> symbols;
  std::vector<std::pair<double, const BandedTensor*>> bands;
  Index k1 = -1;
  Index k2 = -1;
  auto check = [&](Index a, Index b) {
    if (k1 < 0) {
      k1 = a;
      k2 = b;
    } else if (a != k1 || b != k2) {
      throw ShapeMismatch("structured_fro_norm2: terms live on different grids");
    }
  };
  for (const NormTerm& t : terms) {
    if (const auto* s = std::get_if<NormTerm::Separable>(&t.op)) {
      if (s->a1->rows() != s->a1->cols() || s->a2->rows() != s->a2->cols())
        throw ShapeMismatch("structured_fro_norm2: factors must be square");
      check(s->a1->rows(), s->a2->rows());
      left.push_back(s->a1);
      right.push_back(s->a2);
      sep_coef.push_back(t.coef);
    } else if (const auto* sym = std::get_if<const StationarySymbol*>(&t.op)) {
      check((*sym)->k1(), (*sym)->k2());
      symbols.emplace_back(t.coef, *sym);
    } else {
      const BandedTensor* b = std::get<const BandedTensor*>(t.op);
      check(b->k1(), b->k2());
      if (b->band().d > 0) bands.emplace_back(t.coef, b);
    }
  }

  const Index r = static_cast<Index>(left.size());
  std::vector<Matrix> gram1(static_cast<std::size_t>(2 * k1 - 1));
  std::vector<Matrix> diag1(static_cast<std::size_t>(2 * k1 - 1));
  for (Index p = -(k1 - 1); p < k1; ++p) {
    auto& u = diag1[static_cast<std::size_t>(p + k1 - 1)];
    u = diagonal_columns(left, k1, p);
    gram1[static_cast<std::size_t>(p + k1 - 1)] = u.transpose() * u;
  }
  std::vector<Matrix> gram2(static_cast<std::size_t>(2 * k2 - 1));
  std::vector<Matrix> diag2(static_cast<std::size_t>(2 * k2 - 1));
  for (Index q = -(k2 - 1); q < k2; ++q) {
    auto& v = diag2[static_cast<std::size_t>(q + k2 - 1)];
    v = diagonal_columns(right, k2, q);
    gram2[static_cast<std::size_t>(q + k2 - 1)] = v.transpose() * v;
  }

  Index max_band = 0;
  for (const auto& [c, b] : bands) max_band = std::max(max_band, b->band().d);

  Vector coef(r + 1);
  for (Index c = 0; c < r; ++c) coef(c) = sep_coef[static_cast<std::size_t>(c)];

  double total = 0.0;
  for (Index p = -(k1 - 1); p < k1; ++p) {
    const Matrix& g1 = gram1[static_cast<std::size_t>(p + k1 - 1)];
    for (Index q = -(k2 - 1); q < k2; ++q) {
      const Matrix& g2 = gram2[static_cast<std::size_t>(q + k2 - 1)];
      double sigma = 0.0;
      for (const auto& [c, s] : symbols) sigma += c * (*s)(p, q);
      coef(r) = sigma;
      // sum_{r,r'} c_r c_r' <u_r,u_r'> <v_r,v_r'>
      double block = coef.dot(g1.cwiseProduct(g2) * coef);

      if (std::abs(p) < max_band && std::abs(q) < max_band) {
        Matrix slice = Matrix::Zero(k1, k2);
        bool any = false;
        for (const auto& [c, b] : bands) {
          if (std::abs(p) >= b->band().d || std::abs(q) >= b->band().d) continue;
          slice += c * b->slice(p, q);
          any = true;
        }
        if (any) {
          const Matrix& u = diag1[static_cast<std::size_t>(p + k1 - 1)];
          const Matrix& v = diag2[static_cast<std::size_t>(q + k2 - 1)];
          // u^T S v for every low-rank column pair, weighted by the coefficients.
          const Matrix cross = u.transpose() * slice * v;
          block += 2.0 * cross.diagonal().dot(coef) + slice.squaredNorm();
        }
      }
      total += block;
    }
  }
  return std::max(total, 0.0);
}

}  // namespace sptcov
