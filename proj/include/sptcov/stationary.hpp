#pragma once

#include <optional>

#include "sptcov/fft.hpp"
#include "sptcov/types.hpp"

namespace sptcov {

/// Symbol of a stationary (two-level Toeplitz) operator on a K1 x K2 grid,
/// stored for every signed lag h in (-K1, K1), l in (-K2, K2). The operator
/// acts as y[i,j] = sum_{k,l} s(k-i, l-j) x[k,l]; central symmetry
/// s(h,l) = s(-h,-l) makes it self-adjoint.
class StationarySymbol {
 public:
  StationarySymbol() = default;
  /// Zero symbol.
  StationarySymbol(Index k1, Index k2);
  /// From a (2k1-1) x (2k2-1) lag array (row h+k1-1, column l+k2-1). The
  /// array is centrally symmetrized.
  StationarySymbol(Index k1, Index k2, const Matrix& lags, std::optional<Index> band = std::nullopt);

  static StationarySymbol delta(Index k1, Index k2, double value);

  Index k1() const { return k1_; }
  Index k2() const { return k2_; }
  const Matrix& lags() const { return s_; }
  std::optional<Index> band() const { return band_; }

  double operator()(Index h, Index l) const { return s_(h + k1_ - 1, l + k2_ - 1); }
  /// Writes s(h,l) and s(-h,-l) together.
  void set(Index h, Index l, double v);

  /// Zero every lag with max(|h|,|l|) >= d and record band d.
  StationarySymbol band_clipped(Bandwidth d) const;
  /// Drops the band annotation (e.g. after an operation that may widen support).
  StationarySymbol without_band() const;

  StationarySymbol scaled(double c) const;
  StationarySymbol& operator+=(const StationarySymbol& o);
  StationarySymbol& operator-=(const StationarySymbol& o);

  bool centrally_symmetric(double tol = 1e-12) const;

 private:
  Index k1_ = 0;
  Index k2_ = 0;
  Matrix s_;
  std::optional<Index> band_;
};

StationarySymbol operator+(StationarySymbol a, const StationarySymbol& b);
StationarySymbol operator-(StationarySymbol a, const StationarySymbol& b);

/// Eigenvalues of the (2K1-1) x (2K2-1) two-level circulant embedding of a
/// symbol, i.e. the 2D DFT of the circularly arranged lag array.
struct CirculantSpectrum {
  Matrix eigenvalues;  // (2k1-1) x (2k2-1), frequency-major like the DFT output
  double min() const { return eigenvalues.minCoeff(); }
  double max() const { return eigenvalues.maxCoeff(); }
};

CirculantSpectrum circulant_spectrum(const StationarySymbol& sym);

/// Toeplitz average of x (x) x:
///   s(h,l) = 1/(K1 K2) sum_{i,j} x[i,j] x[i+h,j+l]   (non-circular)
/// via zero padding and |DFT|^2.
StationarySymbol topavg_sample(const Eigen::Ref<const Matrix>& x);
/// Same quantity by direct lag sums, O(K^4).
StationarySymbol topavg_sample_direct(const Eigen::Ref<const Matrix>& x);

/// Toeplitz average of a1 (x) a2 from signed diagonal sums, O(K^2).
StationarySymbol topavg_separable(const Matrix& a1, const Matrix& a2);
inline StationarySymbol topavg_separable(const SymMatrix& a1, const SymMatrix& a2) {
  return topavg_separable(a1.matrix(), a2.matrix());
}

/// (1/N) sum_n topavg(X_n (x) X_n) - topavg(a1 (x) a2), optionally band clipped.
StationarySymbol topavg_stack(const SampleStack& samples, const SymMatrix& a1, const SymMatrix& a2,
                              std::optional<Bandwidth> band = std::nullopt);

/// Dense-tensor Toeplitz averaging (oracle scale).
StationarySymbol topavg_tensor(const CovTensor4& t);
/// Dense tensor of the stationary operator (oracle scale).
CovTensor4 stationary_tensor(const StationarySymbol& sym, Index cap = CovTensor4::kDefaultCap);

/// Symbol together with its cached circulant spectrum, for repeated application.
class StationaryOperator {
 public:
  StationaryOperator() = default;
  explicit StationaryOperator(StationarySymbol sym);

  const StationarySymbol& symbol() const { return sym_; }
  const CirculantSpectrum& spectrum() const { return spec_; }
  Index k1() const { return sym_.k1(); }
  Index k2() const { return sym_.k2(); }

  Matrix apply(const Eigen::Ref<const Matrix>& x) const;

 private:
  StationarySymbol sym_;
  CirculantSpectrum spec_;
  Matrix half_;  // eigenvalues restricted to the r2c half spectrum
};

/// y[i,j] = sum_{k,l} s(k-i, l-j) x[k,l] via the circulant embedding and 2D FFT.
Matrix apply_stationary(const StationarySymbol& sym, const Eigen::Ref<const Matrix>& x);
/// Same by direct double sum, O(K^4).
Matrix apply_stationary_direct(const StationarySymbol& sym, const Eigen::Ref<const Matrix>& x);

/// Clamp the negative circulant eigenvalues to zero and transform back.
StationarySymbol psd_project_symbol(const StationarySymbol& sym);

/// Frobenius norm of the represented K1K2 x K1K2 operator:
/// sqrt(sum_{h,l} (K1-|h|)(K2-|l|) s(h,l)^2).
double symbol_fro_norm(const StationarySymbol& sym);

}  // namespace sptcov
