#include "sptcov/bench.hpp"

#include <charconv>
#include <chrono>
#include <sstream>

#include "sptcov/simgen.hpp"

namespace sptcov {

std::string profile_name(BenchProfile p) {
  switch (p) {
    case BenchProfile::estimation: return "estimation";
    case BenchProfile::adi: return "adi";
    case BenchProfile::pcg: return "pcg";
  }
  return "?";
}

BenchProfile parse_profile(const std::string& s) {
  for (BenchProfile p : {BenchProfile::estimation, BenchProfile::adi, BenchProfile::pcg})
    if (profile_name(p) == s) return p;
  throw Error("unknown bench profile '" + s + "' (expected estimation, adi or pcg)");
}

Index bench_bandwidth(Index k) { return 2 * (k / 20) + 1; }

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

BenchRow run_bench(BenchProfile profile, Index k, const BenchConfig& cfg) {
  SimConfig sim;
  sim.k = k;
  sim.n = cfg.n;
  sim.tau = cfg.tau;
  sim.d_true = std::min(bench_bandwidth(k), k % 2 ? k : k - 1);
  sim.seed = cfg.seed;
  sim.cell = static_cast<std::uint32_t>(k);
  const Simulation data = simulate(sim);

  BenchRow row;
  row.k = k;
  row.d = sim.d_true;
  row.profile = profile;
  EstimateOptions opts;
  opts.kind = BandedKind::stationary;

  auto t0 = std::chrono::steady_clock::now();
  const SepPlusBandedCov c = estimate_full(data.samples, Bandwidth{sim.d_true}, opts);
  if (profile == BenchProfile::estimation) {
    row.seconds = seconds_since(t0);
    return row;
  }

  Philox rng(cfg.seed, static_cast<std::uint32_t>(k), 0x736f6cu);
  Matrix x(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) x(i, j) = rng.normal();
  const Matrix y = apply_model(c, x) + cfg.adi.ridge * x;

  t0 = std::chrono::steady_clock::now();
  const AdiResult r = adi_solve(c, y, cfg.adi);
  if (profile == BenchProfile::adi) {
    row.seconds = seconds_since(t0);
    row.outer_iterations = r.outer_iterations;
    row.mean_pcg_iterations = r.mean_pcg_iterations();
    row.rel_error = (r.x - x).norm() / x.norm();
    row.residual = r.history.empty() ? 0.0 : r.history.back().residual;
    row.converged = r.converged;
    return row;
  }

  const StationaryOperator op(*c.symbol());
  t0 = std::chrono::steady_clock::now();
  const PcgResult p = pcg_solve(op, r.initial_rho + cfg.adi.ridge, y, cfg.adi.pcg_tol, cfg.adi.pcg_max);
  row.seconds = seconds_since(t0);
  row.mean_pcg_iterations = p.iterations;
  row.residual = p.residual;
  row.converged = p.converged;
  return row;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  auto num = [](double v) {
    char buf[64];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
  };
  std::ostringstream out;
  out << "K,d,profile,seconds,outer_iterations,mean_pcg_iterations,rel_error,residual,converged\n";
  for (const auto& r : rows)
    out << r.k << ',' << r.d << ',' << profile_name(r.profile) << ',' << num(r.seconds) << ',' << r.outer_iterations
        << ',' << num(r.mean_pcg_iterations) << ',' << num(r.rel_error) << ',' << num(r.residual) << ','
        << (r.converged ? 1 : 0) << '\n';
  return out.str();
}

}  // namespace sptcov
