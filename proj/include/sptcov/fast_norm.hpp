#pragma once

#include <span>
#include <variant>
#include <vector>

#include "sptcov/model.hpp"

namespace sptcov {

/// One signed term of a structured sum: coefficient times a separable
/// product, a stationary operator or a banded tensor.
struct NormTerm {
  struct Separable {
    const Matrix* a1;
    const Matrix* a2;
  };
  double coef = 1.0;
  std::variant<Separable, const StationarySymbol*, const BandedTensor*> op;

  static NormTerm separable(const SymMatrix& a1, const SymMatrix& a2, double coef = 1.0) {
    return NormTerm{coef, Separable{&a1.matrix(), &a2.matrix()}};
  }
  static NormTerm separable(const Matrix& a1, const Matrix& a2, double coef = 1.0) {
    return NormTerm{coef, Separable{&a1, &a2}};
  }
  static NormTerm stationary(const StationarySymbol& s, double coef = 1.0) { return NormTerm{coef, &s}; }
  static NormTerm banded(const BandedTensor& b, double coef = 1.0) { return NormTerm{coef, &b}; }
};

/// Appends the terms of c (separable part and banded part) with coefficient `coef`.
void append_terms(std::vector<NormTerm>& terms, const SepPlusBandedCov& c, double coef = 1.0);

/// Squared Frobenius norm of sum_t coef_t * op_t, evaluated lag block by lag
/// block. In block (p,q), separable terms contribute outer products of the
/// p-th and q-th diagonals, stationary terms a constant, banded tensors a
/// dense slice; low-rank blocks are reduced through their Gram matrices.
/// O(K^2 R^2) for R separable terms, plus O(K^2 d^2 R) for banded tensors.
double structured_fro_norm2(std::span<const NormTerm> terms);

}  // namespace sptcov
