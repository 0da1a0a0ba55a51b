#include "sptcov/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <utility>

namespace sptcov {

struct Fft2::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

namespace {

// fftw planning is not thread safe; execution with the new-array API is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

const Fft2::Plans* plans_for(Index rows, Index cols) {
  static std::map<std::pair<Index, Index>, Fft2::Plans> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find({rows, cols});
  if (it != cache.end()) return &it->second;
  const Index half = cols / 2 + 1;
  auto* r = static_cast<double*>(fftw_malloc(sizeof(double) * rows * cols));
  auto* c = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * rows * half));
  Fft2::Plans p;
  p.forward = fftw_plan_dft_r2c_2d(static_cast<int>(rows), static_cast<int>(cols), r, c, FFTW_ESTIMATE);
  p.inverse = fftw_plan_dft_c2r_2d(static_cast<int>(rows), static_cast<int>(cols), c, r, FFTW_ESTIMATE);
  fftw_free(r);
  fftw_free(c);
  return &cache.emplace(std::make_pair(rows, cols), p).first->second;
}

}  // namespace

Fft2::Fft2(Index rows, Index cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw ShapeMismatch("Fft2 needs a non-empty grid");
  plans_ = plans_for(rows, cols);
  real_ = static_cast<double*>(fftw_malloc(sizeof(double) * rows * cols));
  spec_ = reinterpret_cast<std::complex<double>*>(
      fftw_malloc(sizeof(fftw_complex) * rows * half_cols()));
  std::fill(real_, real_ + rows * cols, 0.0);
}

Fft2::~Fft2() {
  if (real_) fftw_free(real_);
  if (spec_) fftw_free(spec_);
}

Fft2::Fft2(Fft2&& o) noexcept
    : rows_(o.rows_), cols_(o.cols_), real_(o.real_), spec_(o.spec_), plans_(o.plans_) {
  o.real_ = nullptr;
  o.spec_ = nullptr;
}

Fft2& Fft2::operator=(Fft2&& o) noexcept {
  if (this != &o) {
    if (real_) fftw_free(real_);
    if (spec_) fftw_free(spec_);
    rows_ = o.rows_;
    cols_ = o.cols_;
    real_ = std::exchange(o.real_, nullptr);
    spec_ = std::exchange(o.spec_, nullptr);
    plans_ = o.plans_;
  }
  return *this;
}

void Fft2::forward() {
  fftw_execute_dft_r2c(plans_->forward, real_, reinterpret_cast<fftw_complex*>(spec_));
}

void Fft2::inverse() {
  fftw_execute_dft_c2r(plans_->inverse, reinterpret_cast<fftw_complex*>(spec_), real_);
}

void Fft2::load_padded(const Eigen::Ref<const Matrix>& block) {
  if (block.rows() > rows_ || block.cols() > cols_) throw ShapeMismatch("Fft2: block larger than grid");
  std::fill(real_, real_ + rows_ * cols_, 0.0);
  for (Index i = 0; i < block.rows(); ++i)
    for (Index j = 0; j < block.cols(); ++j) real_[i * cols_ + j] = block(i, j);
}

Matrix Fft2::corner(Index r, Index c, double scale) const {
  Matrix out(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) out(i, j) = scale * real_[i * cols_ + j];
  return out;
}

}  // namespace sptcov
