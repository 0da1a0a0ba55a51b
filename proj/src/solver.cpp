#include "sptcov/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sptcov {

Matrix apply_separable(const Matrix& a1, const Matrix& a2, const Eigen::Ref<const Matrix>& x) {
  if (a1.cols() != x.rows() || a2.cols() != x.cols())
    throw ShapeMismatch("apply_separable: factor sizes do not match the input");
  Matrix tmp = a1 * x;
  return tmp * a2.transpose();
}

ModelOperator::ModelOperator(const SepPlusBandedCov& c) : c_(&c) {
  if (const auto* s = c.symbol()) stationary_.emplace(*s);
}

Matrix ModelOperator::apply_banded(const Eigen::Ref<const Matrix>& x) const {
  if (stationary_) return stationary_->apply(x);
  if (const auto* b = c_->banded_tensor()) return b->apply(x);
  return Matrix::Zero(x.rows(), x.cols());
}

Matrix ModelOperator::apply(const Eigen::Ref<const Matrix>& x) const {
  Matrix y = apply_separable(c_->a1, c_->a2, x);
  if (c_->kind() != BandedKind::none) y += apply_banded(x);
  return y;
}

double ModelOperator::quad_form(const Eigen::Ref<const Matrix>& x) const {
  return x.cwiseProduct(apply(x)).sum();
}

Matrix apply_model(const SepPlusBandedCov& c, const Eigen::Ref<const Matrix>& x) {
  return ModelOperator(c).apply(x);
}

EigenPair sym_eigen(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix());
  if (es.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
  const Index k = a.size();
  EigenPair out;
  out.u.resize(k, k);
  out.phi.resize(k);
  // Eigen returns ascending order.
  for (Index i = 0; i < k; ++i) {
    out.phi(i) = es.eigenvalues()(k - 1 - i);
    out.u.col(i) = es.eigenvectors().col(k - 1 - i);
  }
  return out;
}

Matrix stein_solve(const EigenPair& e1, const EigenPair& e2, double rho, const Eigen::Ref<const Matrix>& r) {
  if (r.rows() != e1.u.rows() || r.cols() != e2.u.rows())
    throw ShapeMismatch("stein_solve: right-hand side does not match the factors");
  const Matrix h = (e1.phi * e2.phi.transpose()).array() + rho;
  const double hmax = h.maxCoeff();
  if (!(hmax > 0.0) || h.minCoeff() <= 1e-14 * hmax)
    throw SingularSystem("stein_solve: shifted separable operator is singular (min eigenvalue " +
                         std::to_string(h.minCoeff()) + ")");
  Matrix z = e1.u.transpose() * r * e2.u;
  z.array() /= h.array();
  return e1.u * z * e2.u.transpose();
}

CirculantPreconditioner::CirculantPreconditioner(const StationarySymbol& sym, double shift)
    : k1_(sym.k1()), k2_(sym.k2()) {
  Fft2 fft(k1_, k2_);
  auto grid = fft.real();
  const double n1 = static_cast<double>(k1_);
  const double n2 = static_cast<double>(k2_);
  for (Index h = 0; h < k1_; ++h)
    for (Index l = 0; l < k2_; ++l) {
      double c = 0.0;
      for (Index hh : {h, h - k1_}) {
        if (hh <= -k1_) continue;
        const double w1 = (n1 - static_cast<double>(std::abs(hh))) / n1;
        for (Index ll : {l, l - k2_}) {
          if (ll <= -k2_) continue;
          const double w2 = (n2 - static_cast<double>(std::abs(ll))) / n2;
          c += w1 * w2 * sym(hh, ll);
        }
      }
      grid[static_cast<std::size_t>(h * k2_ + l)] = c;
    }
  fft.forward();
  const Index hc = fft.half_cols();
  auto spec = fft.spectrum();
  eig_.resize(k1_, k2_);
  for (Index a = 0; a < k1_; ++a)
    for (Index b = 0; b < k2_; ++b) {
      if (b < hc) eig_(a, b) = spec[static_cast<std::size_t>(a * hc + b)].real();
      else eig_(a, b) = spec[static_cast<std::size_t>(((k1_ - a) % k1_) * hc + (k2_ - b))].real();
    }
  const double top = std::max(eig_.maxCoeff(), 0.0) + shift;
  const double floor = top > 0.0 ? 1e-12 * top : 1.0;
  inv_half_.resize(k1_, hc);
  for (Index a = 0; a < k1_; ++a)
    for (Index b = 0; b < hc; ++b) inv_half_(a, b) = 1.0 / std::max(std::max(eig_(a, b), 0.0) + shift, floor);
}

Matrix CirculantPreconditioner::solve(const Eigen::Ref<const Matrix>& r) const {
  Fft2 fft(k1_, k2_);
  fft.load_padded(r);
  fft.forward();
  auto spec = fft.spectrum();
  const Index hc = fft.half_cols();
  for (Index a = 0; a < k1_; ++a)
    for (Index b = 0; b < hc; ++b) spec[static_cast<std::size_t>(a * hc + b)] *= inv_half_(a, b);
  fft.inverse();
  return fft.corner(k1_, k2_, 1.0 / static_cast<double>(k1_ * k2_));
}

PcgResult pcg_solve(const StationaryOperator& op, double rho, const Eigen::Ref<const Matrix>& y, double tol,
                    int max_iter, const Matrix* x0) {
  if (y.rows() != op.k1() || y.cols() != op.k2()) throw ShapeMismatch("pcg_solve: grid mismatch");
  const CirculantPreconditioner pre(op.symbol(), rho);
  auto matvec = [&](const Matrix& v) -> Matrix { return op.apply(v) + rho * v; };

  PcgResult out;
  const double ynorm = y.norm();
  if (ynorm == 0.0) {
    out.x = Matrix::Zero(y.rows(), y.cols());
    out.converged = true;
    return out;
  }
  out.x = x0 ? *x0 : Matrix::Zero(y.rows(), y.cols());
  Matrix r = y - (x0 ? matvec(out.x) : Matrix::Zero(y.rows(), y.cols()));
  out.residual = r.norm() / ynorm;
  if (out.residual <= tol) {
    out.converged = true;
    return out;
  }
  Matrix z = pre.solve(r);
  Matrix p = z;
  double rz = r.cwiseProduct(z).sum();
  for (int it = 1; it <= max_iter; ++it) {
    const Matrix ap = matvec(p);
    const double pap = p.cwiseProduct(ap).sum();
    if (!(pap > 0.0)) break;  // operator not positive definite along p
    const double alpha = rz / pap;
    out.x += alpha * p;
    r -= alpha * ap;
    out.iterations = it;
    out.residual = r.norm() / ynorm;
    if (out.residual <= tol) {
      out.converged = true;
      break;
    }
    z = pre.solve(r);
    const double rz_new = r.cwiseProduct(z).sum();
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return out;
}

PcgResult pcg_solve(const StationarySymbol& sym, double rho, const Eigen::Ref<const Matrix>& y, double tol,
                    int max_iter) {
  return pcg_solve(StationaryOperator(sym), rho, y, tol, max_iter);
}

int AdiResult::total_pcg_iterations() const {
  return std::accumulate(history.begin(), history.end(), 0,
                         [](int acc, const AdiStep& s) { return acc + s.pcg_iterations; });
}

double AdiResult::mean_pcg_iterations() const {
  return history.empty() ? 0.0 : static_cast<double>(total_pcg_iterations()) / static_cast<double>(history.size());
}

namespace {

// The banded part plus ridge, with the two operations ADI needs from it.
struct ShiftedBanded {
  const SepPlusBandedCov* c;
  double ridge;
  std::optional<StationaryOperator> stationary;
  Matrix variance;  // diagonal case

  Matrix apply(const Matrix& x) const {
    if (stationary) return stationary->apply(x) + ridge * x;
    return variance.cwiseProduct(x);
  }
  // (B + ridge + rho) x = r
  Matrix shifted_solve(double rho, const Matrix& r, const AdiConfig& cfg, const Matrix* x0, int& iters) const {
    if (stationary) {
      PcgResult pr = pcg_solve(*stationary, rho + ridge, r, cfg.pcg_tol, cfg.pcg_max, x0);
      iters = pr.iterations;
      return std::move(pr.x);
    }
    iters = 0;
    return r.array() / (variance.array() + rho);
  }
  void bounds(double& lo, double& hi) const {
    if (stationary) {
      lo = std::max(stationary->spectrum().min(), 0.0) + ridge;
      hi = std::max(stationary->spectrum().max(), 0.0) + ridge;
    } else {
      lo = std::max(variance.minCoeff(), 0.0);
      hi = std::max(variance.maxCoeff(), 0.0);
    }
  }
};

double dot(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

// Flexible GMRES on C + ridge, right-preconditioned by one Peaceman-Rachford
// sweep from zero: z = 2 rho (B + ridge + rho)^-1 (A + rho)^-1 v.
// Flexible because the inner CG solves are only accurate to pcg_tol.
void adi_krylov(const SepPlusBandedCov& c, const ShiftedBanded& b, const EigenPair& e1, const EigenPair& e2,
                double rho, const Eigen::Ref<const Matrix>& y, const AdiConfig& cfg, AdiResult& out) {
  const int m = cfg.max_outer;
  const double beta = y.norm();
  // forward error <= condition * residual; never ask for less than roundoff allows
  const double target = std::max(cfg.tol / std::max(out.condition_estimate, 1.0), 1e-13);
  std::vector<Matrix> v, z;
  v.reserve(m + 1);
  z.reserve(m);
  v.emplace_back(y / beta);
  Matrix h = Matrix::Zero(m + 1, m);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
  g(0) = beta;
  std::vector<double> cs(m), sn(m);
  Matrix x = Matrix::Zero(y.rows(), y.cols());

  auto iterate = [&](int n) {
    const Eigen::VectorXd coef = h.topLeftCorner(n, n).triangularView<Eigen::Upper>().solve(g.head(n));
    Matrix s = Matrix::Zero(y.rows(), y.cols());
    for (int j = 0; j < n; ++j) s += coef(j) * z[j];
    return s;
  };

  for (int it = 0; it < m; ++it) {
    AdiStep step;
    step.rho = rho;
    const Matrix half = stein_solve(e1, e2, rho, v[it]);
    z.push_back(b.shifted_solve(rho, (2.0 * rho) * half, cfg, nullptr, step.pcg_iterations));
    Matrix w = apply_separable(c.a1, c.a2, z[it]) + b.apply(z[it]);
    // two passes of Gram-Schmidt
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j <= it; ++j) {
        const double hj = dot(w, v[j]);
        h(j, it) += hj;
        w -= hj * v[j];
      }
    const double wn = w.norm();
    h(it + 1, it) = wn;
    v.emplace_back(wn > 0.0 ? Matrix(w / wn) : w);
    for (int j = 0; j < it; ++j) {
      const double a = h(j, it), bb = h(j + 1, it);
      h(j, it) = cs[j] * a + sn[j] * bb;
      h(j + 1, it) = -sn[j] * a + cs[j] * bb;
    }
    const double r = std::hypot(h(it, it), h(it + 1, it));
    cs[it] = h(it, it) / r;
    sn[it] = h(it + 1, it) / r;
    h(it, it) = r;
    h(it + 1, it) = 0.0;
    g(it + 1) = -sn[it] * g(it);
    g(it) = cs[it] * g(it);

    Matrix next = iterate(it + 1);
    const double xn = x.norm();
    step.rel_change = xn > 0.0 ? (next - x).norm() / xn : std::numeric_limits<double>::infinity();
    x = std::move(next);
    step.residual = std::abs(g(it + 1)) / beta;
    out.history.push_back(step);
    out.outer_iterations = it + 1;
    if (step.residual <= target || wn == 0.0) {
      out.converged = true;
      break;
    }
  }
  out.x = std::move(x);
}

}  // namespace

AdiResult adi_solve(const SepPlusBandedCov& c, const Eigen::Ref<const Matrix>& y, const AdiConfig& cfg) {
  if (y.rows() != c.k1() || y.cols() != c.k2()) throw ShapeMismatch("adi_solve: right-hand side grid mismatch");
  if (cfg.tol <= 0.0 || cfg.max_outer < 1 || cfg.ridge < 0.0 || cfg.pcg_tol <= 0.0 || cfg.pcg_max < 1)
    throw Error("adi_solve: invalid configuration");
  const EigenPair e1 = sym_eigen(c.a1);
  const EigenPair e2 = sym_eigen(c.a2);

  AdiResult out;
  if (c.kind() == BandedKind::none) {
    out.x = stein_solve(e1, e2, cfg.ridge, y);
    out.outer_iterations = 1;
    const Matrix res = apply_separable(c.a1, c.a2, out.x) + cfg.ridge * out.x - y;
    const double yn = y.norm();
    out.history.push_back({cfg.ridge, 0.0, yn > 0 ? res.norm() / yn : 0.0, 0});
    out.converged = true;
    return out;
  }

  ShiftedBanded b{&c, cfg.ridge, std::nullopt, {}};
  if (const auto* s = c.symbol()) {
    b.stationary.emplace(*s);
  } else {
    const BandedTensor& t = *c.banded_tensor();
    if (t.band().d != 1)
      throw Unsupported("adi_solve: non-stationary banded parts are only supported for d = 1 (diagonal)");
    b.variance.resize(c.k1(), c.k2());
    for (Index i = 0; i < c.k1(); ++i)
      for (Index j = 0; j < c.k2(); ++j) b.variance(i, j) = t(i, j, 0, 0) + cfg.ridge;
  }

  // Extreme eigenvalues of A1 (x) A2 are among the corner products of the factor spectra.
  const double corners[] = {e1.phi(0) * e2.phi(0), e1.phi(0) * e2.phi(e2.phi.size() - 1),
                            e1.phi(e1.phi.size() - 1) * e2.phi(0),
                            e1.phi(e1.phi.size() - 1) * e2.phi(e2.phi.size() - 1)};
  const double alpha_max = std::max(*std::max_element(std::begin(corners), std::end(corners)), 0.0);
  const double alpha_min = std::max(*std::min_element(std::begin(corners), std::end(corners)), 0.0);
  double beta_min = 0.0;
  double beta_max = 0.0;
  b.bounds(beta_min, beta_max);
  const double eps = cfg.eps < 0.0 ? cfg.tol : cfg.eps;
  double rho = std::sqrt(std::max(alpha_max * alpha_min, beta_max * beta_min)) + eps;
  out.initial_rho = rho;

  const double ynorm = y.norm();
  Matrix x = Matrix::Zero(y.rows(), y.cols());
  if (ynorm == 0.0) {
    out.x = x;
    out.converged = true;
    return out;
  }
  auto residual_of = [&](const Matrix& v) {
    return (apply_separable(c.a1, c.a2, v) + b.apply(v) - y).norm() / ynorm;
  };
  if (cfg.krylov) {
    out.condition_estimate = (alpha_max + beta_max) / std::max(alpha_min + beta_min, 1e-300);
    adi_krylov(c, b, e1, e2, rho, y, cfg, out);
    out.final_residual = residual_of(out.x);
    return out;
  }

  for (int k = 1; k <= cfg.max_outer; ++k) {
    AdiStep step;
    step.rho = rho;
    const Matrix half = stein_solve(e1, e2, rho, y - b.apply(x) + rho * x);
    const Matrix rhs = y - apply_separable(c.a1, c.a2, half) + rho * half;
    Matrix next = b.shifted_solve(rho, rhs, cfg, &half, step.pcg_iterations);
    const double xn = x.norm();
    step.rel_change = xn > 0.0 ? (next - x).norm() / xn : std::numeric_limits<double>::infinity();
    x = std::move(next);
    step.residual = residual_of(x);
    out.history.push_back(step);
    out.outer_iterations = k;
    if (step.rel_change <= cfg.tol || step.residual <= cfg.tol) {
      out.converged = true;
      break;
    }
    // Non-increasing schedule, floored at eps so the Stein step stays regular.
    if (std::isfinite(step.rel_change)) rho = std::max(std::min(rho, step.rel_change), eps);
  }
  out.final_residual = residual_of(x);
  out.x = std::move(x);
  return out;
}

}  // namespace sptcov
