#pragma once

#include <optional>
#include <vector>

#include "sptcov/model.hpp"
#include "sptcov/stationary.hpp"

namespace sptcov {

/// (a1 (x) a2) x = a1 x a2^T.
Matrix apply_separable(const Matrix& a1, const Matrix& a2, const Eigen::Ref<const Matrix>& x);
inline Matrix apply_separable(const SymMatrix& a1, const SymMatrix& a2, const Eigen::Ref<const Matrix>& x) {
  return apply_separable(a1.matrix(), a2.matrix(), x);
}

/// Applies a separable-plus-banded operator, caching the circulant spectrum
/// of a stationary part. Holds a reference to the model.
class ModelOperator {
 public:
  explicit ModelOperator(const SepPlusBandedCov& c);
  const SepPlusBandedCov& model() const { return *c_; }
  Matrix apply(const Eigen::Ref<const Matrix>& x) const;
  Matrix apply_banded(const Eigen::Ref<const Matrix>& x) const;
  /// <x, C x>
  double quad_form(const Eigen::Ref<const Matrix>& x) const;

 private:
  const SepPlusBandedCov* c_;
  std::optional<StationaryOperator> stationary_;
};

Matrix apply_model(const SepPlusBandedCov& c, const Eigen::Ref<const Matrix>& x);

/// Symmetric eigendecomposition a = u diag(phi) u^T, eigenvalues descending.
struct EigenPair {
  Matrix u;
  Vector phi;
};

EigenPair sym_eigen(const SymMatrix& a);

/// Solves (A1 (x) A2 + rho I) X = R exactly through the factor eigenbases:
/// X = U (G o U^T R V) V^T with G = 1 / (phi psi^T + rho).
Matrix stein_solve(const EigenPair& e1, const EigenPair& e2, double rho, const Eigen::Ref<const Matrix>& r);

struct PcgResult {
  Matrix x;
  int iterations = 0;
  double residual = 0.0;  // ||(B + rho I) x - y|| / ||y||
  bool converged = false;
};

/// Optimal (T. Chan) circulant approximation of a two-level Toeplitz
/// operator, level by level, plus a shift; applied as a diagonal solve in the
/// K1 x K2 Fourier basis.
class CirculantPreconditioner {
 public:
  CirculantPreconditioner(const StationarySymbol& sym, double shift);
  Matrix solve(const Eigen::Ref<const Matrix>& r) const;
  /// Eigenvalues of the circulant approximation (without the shift).
  const Matrix& eigenvalues() const { return eig_; }

 private:
  Index k1_;
  Index k2_;
  Matrix eig_;
  Matrix inv_half_;
};

/// Preconditioned CG for (B + rho I) x = y with B stationary.
PcgResult pcg_solve(const StationaryOperator& op, double rho, const Eigen::Ref<const Matrix>& y, double tol,
                    int max_iter, const Matrix* x0 = nullptr);
PcgResult pcg_solve(const StationarySymbol& sym, double rho, const Eigen::Ref<const Matrix>& y, double tol,
                    int max_iter);

struct AdiConfig {
  double tol = 1e-6;
  int max_outer = 200;
  double ridge = 1e-5;
  /// Added to the initial shift; negative means "use tol".
  double eps = -1.0;
  double pcg_tol = 1e-10;
  int pcg_max = 1000;
  /// Use one ADI sweep at the initial shift as the preconditioner of a
  /// flexible GMRES run (stopping on an estimated forward error). Off: plain
  /// ADI iteration with the shrinking shift schedule.
  bool krylov = true;
};

struct AdiStep {
  double rho = 0.0;
  double rel_change = 0.0;
  double residual = 0.0;  // relative; the GMRES estimate in krylov mode
  int pcg_iterations = 0;
};

struct AdiResult {
  Matrix x;
  int outer_iterations = 0;
  std::vector<AdiStep> history;
  bool converged = false;
  double initial_rho = 0.0;
  /// Bound ratio of the system spectrum used by the krylov stopping rule.
  double condition_estimate = 0.0;
  double final_residual = 0.0;  // true ||C x - y|| / ||y||
  int total_pcg_iterations() const;
  double mean_pcg_iterations() const;
};

/// Solves (A1 (x) A2 + B + ridge I) X = Y by alternating the exact Stein
/// solve with a preconditioned CG solve for the stationary part. A banded
/// part with d = 1 (a diagonal variance map) is solved elementwise instead.
AdiResult adi_solve(const SepPlusBandedCov& c, const Eigen::Ref<const Matrix>& y, const AdiConfig& cfg = {});

}  // namespace sptcov
