#include "sptcov/simgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sptcov/bandwidth.hpp"
#include "sptcov/solver.hpp"

namespace sptcov {

void SimConfig::validate() const {
  if (k < 1 || k2 < 0 || n < 1) throw ShapeMismatch("simulation needs k >= 1 and n >= 1");
  if (tau < 0.0 || noise_sigma2 < 0.0) throw ShapeMismatch("tau and noise variance must be non-negative");
  if (d_true < 0 || (d_true > 0 && d_true % 2 == 0))
    throw BandwidthOutOfRange(d_true, std::min(grid1(), grid2()));
  if (d_true > std::min(grid1(), grid2())) throw BandwidthOutOfRange(d_true, std::min(grid1(), grid2()));
}

SymMatrix legendre_cov(Index k, Index rank) {
  if (k < 1 || rank < 1) throw ShapeMismatch("legendre_cov needs k, rank >= 1");
  const Index r = std::min(k, rank);
  Matrix p(k, r);
  for (Index i = 0; i < k; ++i) {
    const double x = 2.0 * ((static_cast<double>(i) + 0.5) / static_cast<double>(k)) - 1.0;
    double prev = 1.0;
    double cur = x;
    p(i, 0) = 1.0;
    if (r > 1) p(i, 1) = x;
    for (Index m = 1; m + 1 < r; ++m) {
      const double next = ((2.0 * m + 1.0) * x * cur - m * prev) / (m + 1.0);
      prev = cur;
      cur = next;
      p(i, m + 1) = next;
    }
  }
  // Gram-Schmidt on the grid, twice for stability.
  for (int pass = 0; pass < 2; ++pass)
    for (Index c = 0; c < r; ++c) {
      for (Index b = 0; b < c; ++b) p.col(c) -= p.col(b).dot(p.col(c)) * p.col(b);
      p.col(c).normalize();
    }
  Vector lam(r);
  for (Index j = 0; j < r; ++j) lam(j) = static_cast<double>(rank - j) / static_cast<double>(rank);
  Matrix a = p * lam.asDiagonal() * p.transpose();
  return SymMatrix(a / a.norm());
}

SymMatrix wiener_cov(Index k) {
  if (k < 1) throw ShapeMismatch("wiener_cov needs k >= 1");
  Matrix a(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j)
      a(i, j) = static_cast<double>(std::min(i, j) + 1) / static_cast<double>(k);
  return SymMatrix(a / a.norm());
}

MaFilter ma_filter(FilterKind kind, Index p) {
  if (p < 0) throw ShapeMismatch("filter half-width must be non-negative");
  MaFilter f{p, Matrix(2 * p + 1, 2 * p + 1)};
  for (Index a = -p; a <= p; ++a)
    for (Index b = -p; b <= p; ++b) {
      double v;
      if (kind == FilterKind::signed_alternating) {
        v = (std::abs(a - b) % 2 == 0) ? 1.0 : -1.0;
      } else {
        const double h = static_cast<double>(p + 1);
        v = (9.0 / 16.0) * (1.0 - std::abs(static_cast<double>(a)) / h) * (1.0 - std::abs(static_cast<double>(b)) / h);
      }
      f.q(a + p, b + p) = v;
    }
  return f;
}

MaSymbol ma_symbol(const MaFilter& f, Index k1, Index k2) {
  const Index p = f.p;
  const Index band = 2 * p + 1;
  Matrix lags = Matrix::Zero(2 * k1 - 1, 2 * k2 - 1);
  for (Index h = -(band - 1); h < band; ++h)
    for (Index l = -(band - 1); l < band; ++l) {
      if (std::abs(h) >= k1 || std::abs(l) >= k2) continue;
      double acc = 0.0;
      for (Index a = -p; a <= p; ++a)
        for (Index b = -p; b <= p; ++b)
          if (std::abs(a - h) <= p && std::abs(b - l) <= p) acc += f(a, b) * f(a - h, b - l);
      lags(h + k1 - 1, l + k2 - 1) = acc;
    }
  StationarySymbol raw(k1, k2, lags, std::min({band, k1, k2}));
  const double norm = symbol_fro_norm(raw);
  if (!(norm > 0.0)) throw Error("moving-average filter induces a zero covariance");
  return {raw.scaled(1.0 / norm), 1.0 / std::sqrt(norm)};
}

namespace {

Matrix sym_sqrt(const SymMatrix& a) {
  const EigenPair e = sym_eigen(a);
  const Vector r = e.phi.cwiseMax(0.0).cwiseSqrt();
  return e.u * r.asDiagonal() * e.u.transpose();
}

}  // namespace

MatrixNormalSampler::MatrixNormalSampler(const SymMatrix& a1, const SymMatrix& a2)
    : l1_(sym_sqrt(a1)), l2_(sym_sqrt(a2)) {}

Matrix MatrixNormalSampler::draw(Philox& rng) const {
  Matrix z(l1_.rows(), l2_.rows());
  for (Index i = 0; i < z.rows(); ++i)
    for (Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
  return l1_ * z * l2_.transpose();
}

Matrix sample_matrix_normal(const SymMatrix& a1, const SymMatrix& a2, Philox& rng) {
  return MatrixNormalSampler(a1, a2).draw(rng);
}

Matrix sample_ma(const MaFilter& f, Index k1, Index k2, double scale, Philox& rng) {
  const Index p = f.p;
  Matrix eps(k1 + 2 * p, k2 + 2 * p);
  for (Index i = 0; i < eps.rows(); ++i)
    for (Index j = 0; j < eps.cols(); ++j) eps(i, j) = rng.normal();
  Matrix w = Matrix::Zero(k1, k2);
  for (Index a = -p; a <= p; ++a)
    for (Index b = -p; b <= p; ++b) w += f(a, b) * eps.block(p + a, p + b, k1, k2);
  return scale * w;
}

namespace {

double noise_variance(const SimConfig& cfg, Index i, Index j) {
  if (cfg.noise_profile == NoiseProfile::constant) return cfg.noise_sigma2;
  const Index span = cfg.grid1() + cfg.grid2() - 2;
  const double t = span > 0 ? static_cast<double>(i + j) / static_cast<double>(span) : 1.0;
  return cfg.noise_sigma2 * (0.25 + 0.75 * t);
}

SymMatrix separable_factor(SepKind kind, Index k) {
  return kind == SepKind::legendre ? legendre_cov(k) : wiener_cov(k);
}

}  // namespace

SepPlusBandedCov sim_truth(const SimConfig& cfg) {
  cfg.validate();
  const Index k1 = cfg.grid1();
  const Index k2 = cfg.grid2();
  SepPlusBandedCov c;
  c.a1 = separable_factor(cfg.sep_kind, k1).scaled(cfg.tau);
  c.a2 = separable_factor(cfg.sep_kind, k2);
  c.a2_trace_normalized = false;
  const bool noisy = cfg.noise_sigma2 > 0.0;
  const Index band = std::max<Index>(cfg.d_true, noisy ? 1 : 0);
  c.d = Bandwidth{band};
  if (band == 0) return c;

  StationarySymbol sym(k1, k2);
  if (cfg.d_true > 0) sym = ma_symbol(ma_filter(cfg.filter_kind, (cfg.d_true - 1) / 2), k1, k2).symbol;
  if (noisy && cfg.noise_profile == NoiseProfile::constant) sym.set(0, 0, sym(0, 0) + cfg.noise_sigma2);
  if (noisy && cfg.noise_profile == NoiseProfile::ramp) {
    BandedTensor b = BandedTensor::from_symbol(sym, Bandwidth{band});
    for (Index i = 0; i < k1; ++i)
      for (Index j = 0; j < k2; ++j) b(i, j, 0, 0) += noise_variance(cfg, i, j);
    c.banded = std::move(b);
  } else {
    c.banded = sym.band_clipped(Bandwidth{band});
  }
  return c;
}

Simulation simulate(const SimConfig& cfg) {
  SepPlusBandedCov truth = sim_truth(cfg);
  const Index k1 = cfg.grid1();
  const Index k2 = cfg.grid2();
  const SymMatrix a1 = separable_factor(cfg.sep_kind, k1);
  const SymMatrix a2 = separable_factor(cfg.sep_kind, k2);
  const MatrixNormalSampler sep(a1, a2);
  std::optional<MaFilter> filter;
  double ma_scale = 0.0;
  if (cfg.d_true > 0) {
    filter = ma_filter(cfg.filter_kind, (cfg.d_true - 1) / 2);
    ma_scale = ma_symbol(*filter, k1, k2).scale;
  }
  Matrix noise_sd(k1, k2);
  for (Index i = 0; i < k1; ++i)
    for (Index j = 0; j < k2; ++j) noise_sd(i, j) = std::sqrt(noise_variance(cfg, i, j));

  Philox rng(cfg.seed, cfg.cell, cfg.rep);
  const double root_tau = std::sqrt(cfg.tau);
  std::vector<double> data(static_cast<std::size_t>(cfg.n * k1 * k2));
  for (Index n = 0; n < cfg.n; ++n) {
    Matrix x = root_tau * sep.draw(rng);
    if (filter) x += sample_ma(*filter, k1, k2, ma_scale, rng);
    if (cfg.noise_sigma2 > 0.0)
      for (Index i = 0; i < k1; ++i)
        for (Index j = 0; j < k2; ++j) x(i, j) += noise_sd(i, j) * rng.normal();
    double* dst = data.data() + n * k1 * k2;
    for (Index i = 0; i < k1; ++i)
      for (Index j = 0; j < k2; ++j) dst[i * k2 + j] = x(i, j);
  }
  return {SampleStack(cfg.n, k1, k2, std::move(data)), std::move(truth)};
}

std::string method_name(Method m) {
  switch (m) {
    case Method::spt_d: return "SPT-d";
    case Method::spt_cv: return "SPT-CV";
    case Method::pt: return "PT";
    case Method::nkp: return "NKP";
    case Method::ece: return "ECE";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (Method m : {Method::spt_d, Method::spt_cv, Method::pt, Method::nkp, Method::ece})
    if (method_name(m) == s) return m;
  throw Error("unknown method '" + s + "' (expected SPT-d, SPT-CV, PT, NKP or ECE)");
}

std::string axis_name(GridAxis a) {
  switch (a) {
    case GridAxis::d: return "d";
    case GridAxis::tau: return "tau";
    case GridAxis::n: return "N";
    case GridAxis::k: return "K";
  }
  return "?";
}

GridAxis parse_axis(const std::string& s) {
  if (s == "d") return GridAxis::d;
  if (s == "tau") return GridAxis::tau;
  if (s == "N" || s == "n") return GridAxis::n;
  if (s == "K" || s == "k") return GridAxis::k;
  throw Error("unknown grid axis '" + s + "' (expected d, tau, N or K)");
}

Index default_cv_max(Index k1, Index k2) {
  const Index k = std::min(k1, k2);
  return std::clamp<Index>(k / 5, 1, k - 1);
}

namespace {

SimConfig cell_config(const ExperimentConfig& cfg, double value, std::uint32_t cell) {
  SimConfig s = cfg.base;
  s.cell = cell;
  switch (cfg.axis) {
    case GridAxis::d: s.d_true = static_cast<Index>(std::llround(value)); break;
    case GridAxis::tau: s.tau = value; break;
    case GridAxis::n: s.n = static_cast<Index>(std::llround(value)); break;
    case GridAxis::k:
      s.k = static_cast<Index>(std::llround(value));
      s.k2 = 0;
      break;
  }
  return s;
}

double method_error(Method m, const ExperimentConfig& cfg, const SimConfig& s, const Simulation& sim) {
  EstimateOptions opts;
  opts.kind = cfg.kind;
  switch (m) {
    case Method::spt_d:
      return rel_error(estimate_full(sim.samples, sim.truth.d, opts), sim.truth);
    case Method::spt_cv: {
      BandwidthSearch search;
      const Index max_d = std::min(s.grid1(), s.grid2()) - 1;
      if (cfg.cv_candidates.empty())
        for (Index d = 0; d <= default_cv_max(s.grid1(), s.grid2()); ++d) search.candidates.push_back(Bandwidth{d});
      else
        for (Index d : cfg.cv_candidates)
          if (d <= max_d) search.candidates.push_back(Bandwidth{d});
      search.folds = std::min(cfg.folds, sim.samples.n());
      search.seed = s.seed ^ (std::uint64_t{s.cell} << 32) ^ s.rep;
      search.estimate = opts;
      const auto sel = select_bandwidth(sim.samples, search);
      return rel_error(estimate_full(sim.samples, sel.d, opts), sim.truth);
    }
    case Method::pt:
      return rel_error(as_model(baseline_pt(sim.samples)), sim.truth);
    case Method::nkp: {
      const NkpResult r = baseline_nkp(sim.samples);
      return rel_error(as_model(SeparableEstimate{r.a1, r.a2}), sim.truth);
    }
    case Method::ece:
      return empirical_rel_error(sim.samples, sim.truth);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

void summarize(ExperimentRow& row) {
  std::vector<double> v;
  for (double e : row.errors)
    if (std::isfinite(e)) v.push_back(e);
  row.valid_reps = static_cast<Index>(v.size());
  if (v.empty()) {
    row.median = row.mean = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  row.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  row.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<ExperimentRow> error_experiment(const ExperimentConfig& cfg) {
  if (cfg.reps < 1) throw ShapeMismatch("experiment needs reps >= 1");
  std::vector<ExperimentRow> rows;
  for (std::size_t c = 0; c < cfg.values.size(); ++c) {
    const double value = cfg.values[c];
    const SimConfig base = cell_config(cfg, value, static_cast<std::uint32_t>(c));
    std::vector<ExperimentRow> cell_rows;
    for (Method m : cfg.methods) cell_rows.push_back(ExperimentRow{cfg.axis, value, method_name(m), 0, 0, 0, {}});
    for (Index r = 0; r < cfg.reps; ++r) {
      SimConfig s = base;
      s.rep = static_cast<std::uint32_t>(r);
      const Simulation sim = simulate(s);
      for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        double err;
        try {
          err = method_error(cfg.methods[mi], cfg, s, sim);
        } catch (const Error&) {
          err = std::numeric_limits<double>::quiet_NaN();
        }
        cell_rows[mi].errors.push_back(err);
      }
    }
    if (cfg.bias) {
      const SepPlusBandedCov truth = sim_truth(base);
      const NkpResult best = nkp_model(truth);
      cell_rows.push_back(ExperimentRow{cfg.axis, value, "bias", 0, 0, 0,
                                        {rel_error(as_model(SeparableEstimate{best.a1, best.a2}), truth)}});
    }
    for (auto& row : cell_rows) {
      summarize(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string experiment_csv(const std::vector<ExperimentRow>& rows) {
  std::ostringstream out;
  out << "axis,value,method,median_rel_error,mean_rel_error,valid_reps\n";
  for (const auto& r : rows)
    out << axis_name(r.axis) << ',' << shortest(r.value) << ',' << r.method << ',' << shortest(r.median) << ','
        << shortest(r.mean) << ',' << r.valid_reps << '\n';
  return out.str();
}

}  // namespace sptcov
