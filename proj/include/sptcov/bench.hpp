#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sptcov/solver.hpp"

namespace sptcov {

enum class BenchProfile { estimation, adi, pcg };
std::string profile_name(BenchProfile p);
BenchProfile parse_profile(const std::string& s);

struct BenchConfig {
  Index n = 300;
  double tau = 3.0;
  std::uint64_t seed = 0;
  AdiConfig adi;
};

struct BenchRow {
  Index k = 0;
  Index d = 0;
  BenchProfile profile = BenchProfile::estimation;
  double seconds = 0.0;
  int outer_iterations = 0;
  double mean_pcg_iterations = 0.0;
  double rel_error = 0.0;  // reconstruction error of the manufactured solution
  double residual = 0.0;
  bool converged = true;
};

/// Bandwidth used by the solver benchmarks: about K/10, rounded to an odd window.
Index bench_bandwidth(Index k);

/// Legendre + signed moving average at d = bench_bandwidth(k), estimated by
/// shifted partial tracing with PSD projection. Timing covers only the
/// profiled step.
BenchRow run_bench(BenchProfile profile, Index k, const BenchConfig& cfg);

std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace sptcov
