#include "sptcov/stationary.hpp"

#include <algorithm>
#include <cmath>

#include "sptcov/parallel.hpp"

namespace sptcov {

namespace {

Index wrap(Index h, Index m) { return h < 0 ? h + m : h; }

// Signed diagonal sums D(h) = sum_i a[i, i+h], h in (-K, K), stored at h+K-1.
Vector diagonal_sums(const Matrix& a) {
  const Index k = a.rows();
  Vector out = Vector::Zero(2 * k - 1);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) out(j - i + k - 1) += a(i, j);
  return out;
}

// Circular arrangement of the lag array on the (2k1-1) x (2k2-1) torus.
void load_circular(const StationarySymbol& sym, Fft2& fft) {
  const Index m1 = fft.rows();
  const Index m2 = fft.cols();
  auto grid = fft.real();
  for (Index h = -(sym.k1() - 1); h < sym.k1(); ++h)
    for (Index l = -(sym.k2() - 1); l < sym.k2(); ++l)
      grid[static_cast<std::size_t>(wrap(h, m1) * m2 + wrap(l, m2))] = sym(h, l);
}

// Smallest 2,3,5,7-smooth size >= n; FFTW is slow on large prime lengths.
Index smooth_size(Index n) {
  for (Index m = n;; ++m) {
    Index r = m;
    for (Index p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

StationarySymbol read_circular(Index k1, Index k2, Fft2& fft, double scale) {
  const Index m1 = fft.rows();
  const Index m2 = fft.cols();
  auto grid = fft.real();
  Matrix lags(2 * k1 - 1, 2 * k2 - 1);
  for (Index h = -(k1 - 1); h < k1; ++h)
    for (Index l = -(k2 - 1); l < k2; ++l)
      lags(h + k1 - 1, l + k2 - 1) = scale * grid[static_cast<std::size_t>(wrap(h, m1) * m2 + wrap(l, m2))];
  return StationarySymbol(k1, k2, lags);
}

}  // namespace

StationarySymbol::StationarySymbol(Index k1, Index k2)
    : k1_(k1), k2_(k2), s_(Matrix::Zero(2 * k1 - 1, 2 * k2 - 1)) {
  if (k1 < 1 || k2 < 1) throw ShapeMismatch("StationarySymbol needs k1, k2 >= 1");
}

StationarySymbol::StationarySymbol(Index k1, Index k2, const Matrix& lags, std::optional<Index> band)
    : k1_(k1), k2_(k2), band_(band) {
  if (k1 < 1 || k2 < 1) throw ShapeMismatch("StationarySymbol needs k1, k2 >= 1");
  if (lags.rows() != 2 * k1 - 1 || lags.cols() != 2 * k2 - 1)
    throw ShapeMismatch("symbol lag array must be (2k1-1) x (2k2-1)");
  if (!lags.allFinite()) throw Error("StationarySymbol: non-finite lag value");
  // Reversing both axes maps (h,l) to (-h,-l).
  s_ = 0.5 * (lags + lags.reverse());
  if (band_) {
    for (Index h = -(k1 - 1); h < k1; ++h)
      for (Index l = -(k2 - 1); l < k2; ++l)
        if (std::max(std::abs(h), std::abs(l)) >= *band_) s_(h + k1 - 1, l + k2 - 1) = 0.0;
  }
}

StationarySymbol StationarySymbol::delta(Index k1, Index k2, double value) {
  StationarySymbol s(k1, k2);
  s.s_(k1 - 1, k2 - 1) = value;
  return s;
}

void StationarySymbol::set(Index h, Index l, double v) {
  s_(h + k1_ - 1, l + k2_ - 1) = v;
  s_(-h + k1_ - 1, -l + k2_ - 1) = v;
}

StationarySymbol StationarySymbol::band_clipped(Bandwidth d) const {
  return StationarySymbol(k1_, k2_, s_, d.d);
}

StationarySymbol StationarySymbol::without_band() const {
  StationarySymbol out = *this;
  out.band_.reset();
  return out;
}

StationarySymbol StationarySymbol::scaled(double c) const {
  StationarySymbol out = *this;
  out.s_ *= c;
  return out;
}

StationarySymbol& StationarySymbol::operator+=(const StationarySymbol& o) {
  if (o.k1_ != k1_ || o.k2_ != k2_) throw ShapeMismatch("symbol grid mismatch");
  s_ += o.s_;
  if (band_ && o.band_) band_ = std::max(*band_, *o.band_);
  else band_.reset();
  return *this;
}

StationarySymbol& StationarySymbol::operator-=(const StationarySymbol& o) {
  if (o.k1_ != k1_ || o.k2_ != k2_) throw ShapeMismatch("symbol grid mismatch");
  s_ -= o.s_;
  if (band_ && o.band_) band_ = std::max(*band_, *o.band_);
  else band_.reset();
  return *this;
}

bool StationarySymbol::centrally_symmetric(double tol) const {
  return (s_ - s_.reverse()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, s_.cwiseAbs().maxCoeff());
}

StationarySymbol operator+(StationarySymbol a, const StationarySymbol& b) { return a += b; }
StationarySymbol operator-(StationarySymbol a, const StationarySymbol& b) { return a -= b; }

CirculantSpectrum circulant_spectrum(const StationarySymbol& sym) {
  const Index m1 = 2 * sym.k1() - 1;
  const Index m2 = 2 * sym.k2() - 1;
  Fft2 fft(m1, m2);
  load_circular(sym, fft);
  fft.forward();
  auto spec = fft.spectrum();
  const Index hc = fft.half_cols();
  double max_abs = 0.0;
  double max_imag = 0.0;
  for (const auto& z : spec) {
    max_abs = std::max(max_abs, std::abs(z));
    max_imag = std::max(max_imag, std::abs(z.imag()));
  }
  if (max_imag > 1e-9 * std::max(max_abs, 1e-300) && max_imag > 1e-300)
    throw Error("circulant spectrum is not real; symbol is not centrally symmetric");
  CirculantSpectrum out;
  out.eigenvalues.resize(m1, m2);
  for (Index a = 0; a < m1; ++a)
    for (Index b = 0; b < m2; ++b) {
      if (b < hc) {
        out.eigenvalues(a, b) = spec[static_cast<std::size_t>(a * hc + b)].real();
      } else {
        const Index ca = (m1 - a) % m1;
        out.eigenvalues(a, b) = spec[static_cast<std::size_t>(ca * hc + (m2 - b))].real();
      }
    }
  return out;
}

StationarySymbol topavg_sample(const Eigen::Ref<const Matrix>& x) {
  const Index k1 = x.rows();
  const Index k2 = x.cols();
  Fft2 fft(smooth_size(2 * k1 - 1), smooth_size(2 * k2 - 1));
  fft.load_padded(x);
  fft.forward();
  for (auto& z : fft.spectrum()) z = std::norm(z);
  fft.inverse();
  const double scale = 1.0 / (static_cast<double>(fft.rows() * fft.cols()) * static_cast<double>(k1 * k2));
  return read_circular(k1, k2, fft, scale);
}

StationarySymbol topavg_sample_direct(const Eigen::Ref<const Matrix>& x) {
  const Index k1 = x.rows();
  const Index k2 = x.cols();
  Matrix lags = Matrix::Zero(2 * k1 - 1, 2 * k2 - 1);
  for (Index h = -(k1 - 1); h < k1; ++h)
    for (Index l = -(k2 - 1); l < k2; ++l) {
      double s = 0.0;
      for (Index i = std::max<Index>(0, -h); i < std::min(k1, k1 - h); ++i)
        for (Index j = std::max<Index>(0, -l); j < std::min(k2, k2 - l); ++j) s += x(i, j) * x(i + h, j + l);
      lags(h + k1 - 1, l + k2 - 1) = s / static_cast<double>(k1 * k2);
    }
  return StationarySymbol(k1, k2, lags);
}

StationarySymbol topavg_separable(const Matrix& a1, const Matrix& a2) {
  const Vector d1 = diagonal_sums(a1);
  const Vector d2 = diagonal_sums(a2);
  const Matrix lags = (d1 * d2.transpose()) / static_cast<double>(a1.rows() * a2.rows());
  return StationarySymbol(a1.rows(), a2.rows(), lags);
}

StationarySymbol topavg_stack(const SampleStack& samples, const SymMatrix& a1, const SymMatrix& a2,
                              std::optional<Bandwidth> band) {
  if (a1.size() != samples.k1() || a2.size() != samples.k2())
    throw ShapeMismatch("topavg_stack: factor sizes do not match the grid");
  const Index k1 = samples.k1();
  const Index k2 = samples.k2();
  Matrix sum = ordered_sum(samples.n(), Matrix(Matrix::Zero(2 * k1 - 1, 2 * k2 - 1)),
                           [&](Index s) -> Matrix { return topavg_sample(samples.sample(s)).lags(); });
  StationarySymbol out(k1, k2, sum / static_cast<double>(samples.n()));
  out -= topavg_separable(a1, a2);
  return band ? out.band_clipped(*band) : out;
}

StationarySymbol topavg_tensor(const CovTensor4& t) {
  const Index k1 = t.k1();
  const Index k2 = t.k2();
  Matrix lags = Matrix::Zero(2 * k1 - 1, 2 * k2 - 1);
  for (Index i = 0; i < k1; ++i)
    for (Index j = 0; j < k2; ++j)
      for (Index k = 0; k < k1; ++k)
        for (Index l = 0; l < k2; ++l) lags(k - i + k1 - 1, l - j + k2 - 1) += t(i, j, k, l);
  lags /= static_cast<double>(k1 * k2);
  return StationarySymbol(k1, k2, lags);
}

CovTensor4 stationary_tensor(const StationarySymbol& sym, Index cap) {
  CovTensor4 t(sym.k1(), sym.k2(), cap);
  for (Index i = 0; i < sym.k1(); ++i)
    for (Index j = 0; j < sym.k2(); ++j)
      for (Index k = 0; k < sym.k1(); ++k)
        for (Index l = 0; l < sym.k2(); ++l) t(i, j, k, l) = sym(k - i, l - j);
  return t;
}

StationaryOperator::StationaryOperator(StationarySymbol sym)
    : sym_(std::move(sym)), spec_(circulant_spectrum(sym_)) {
  const Index hc = spec_.eigenvalues.cols() / 2 + 1;
  half_ = spec_.eigenvalues.leftCols(hc);
}

Matrix StationaryOperator::apply(const Eigen::Ref<const Matrix>& x) const {
  if (x.rows() != sym_.k1() || x.cols() != sym_.k2())
    throw ShapeMismatch("apply_stationary: input does not match the symbol grid");
  const Index m1 = spec_.eigenvalues.rows();
  const Index m2 = spec_.eigenvalues.cols();
  Fft2 fft(m1, m2);
  fft.load_padded(x);
  fft.forward();
  auto spec = fft.spectrum();
  const Index hc = fft.half_cols();
  for (Index a = 0; a < m1; ++a)
    for (Index b = 0; b < hc; ++b) spec[static_cast<std::size_t>(a * hc + b)] *= half_(a, b);
  fft.inverse();
  return fft.corner(x.rows(), x.cols(), 1.0 / static_cast<double>(m1 * m2));
}

Matrix apply_stationary(const StationarySymbol& sym, const Eigen::Ref<const Matrix>& x) {
  return StationaryOperator(sym).apply(x);
}

Matrix apply_stationary_direct(const StationarySymbol& sym, const Eigen::Ref<const Matrix>& x) {
  if (x.rows() != sym.k1() || x.cols() != sym.k2())
    throw ShapeMismatch("apply_stationary: input does not match the symbol grid");
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j)
      for (Index k = 0; k < x.rows(); ++k)
        for (Index l = 0; l < x.cols(); ++l) y(i, j) += sym(k - i, l - j) * x(k, l);
  return y;
}

StationarySymbol psd_project_symbol(const StationarySymbol& sym) {
  const Index m1 = 2 * sym.k1() - 1;
  const Index m2 = 2 * sym.k2() - 1;
  Fft2 fft(m1, m2);
  load_circular(sym, fft);
  fft.forward();
  for (auto& z : fft.spectrum()) z = std::complex<double>(std::max(z.real(), 0.0), 0.0);
  fft.inverse();
  return read_circular(sym.k1(), sym.k2(), fft, 1.0 / static_cast<double>(m1 * m2));
}

double symbol_fro_norm(const StationarySymbol& sym) {
  double s = 0.0;
  for (Index h = -(sym.k1() - 1); h < sym.k1(); ++h)
    for (Index l = -(sym.k2() - 1); l < sym.k2(); ++l) {
      const double v = sym(h, l);
      s += static_cast<double>((sym.k1() - std::abs(h)) * (sym.k2() - std::abs(l))) * v * v;
    }
  return std::sqrt(s);
}

}  // namespace sptcov
