#pragma once

#include <complex>
#include <memory>
#include <span>

#include "sptcov/types.hpp"

namespace sptcov {

/// Real-to-complex 2D DFT on a fixed rows x cols grid (row-major layout).
/// The half spectrum has rows x (cols/2 + 1) entries. Plans are shared
/// per shape; each instance owns its own work buffers, so separate
/// instances may run concurrently.
class Fft2 {
 public:
  Fft2(Index rows, Index cols);
  ~Fft2();
  Fft2(Fft2&&) noexcept;
  Fft2& operator=(Fft2&&) noexcept;
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index half_cols() const { return cols_ / 2 + 1; }

  /// Real grid buffer (rows x cols, row-major).
  std::span<double> real() { return {real_, static_cast<std::size_t>(rows_ * cols_)}; }
  /// Half-spectrum buffer (rows x half_cols, row-major).
  std::span<std::complex<double>> spectrum() {
    return {spec_, static_cast<std::size_t>(rows_ * half_cols())};
  }

  /// real() -> spectrum().
  void forward();
  /// spectrum() -> real(), unnormalized (scaled by rows*cols); destroys spectrum().
  void inverse();

  /// Zero the real buffer and copy `block` into its top-left corner.
  void load_padded(const Eigen::Ref<const Matrix>& block);
  /// Copy the top-left r x c corner of the real buffer, multiplied by `scale`.
  Matrix corner(Index r, Index c, double scale) const;

  struct Plans;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  double* real_ = nullptr;
  std::complex<double>* spec_ = nullptr;
  const Plans* plans_ = nullptr;
};

}  // namespace sptcov
