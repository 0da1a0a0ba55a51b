#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sptcov/bandwidth.hpp"
#include "sptcov/bench.hpp"
#include "sptcov/cli.hpp"
#include "sptcov/gof.hpp"
#include "sptcov/io.hpp"
#include "sptcov/parallel.hpp"

namespace sptcov {

using nlohmann::json;

namespace {

constexpr int kReportSchema = 1;

BandedKind parse_kind(const std::string& s) {
  if (s == "stationary") return BandedKind::stationary;
  if (s == "banded") return BandedKind::banded;
  if (s == "none") return BandedKind::none;
  throw Error("unknown banded kind '" + s + "' (expected stationary, banded or none)");
}

std::string kind_name(BandedKind k) {
  switch (k) {
    case BandedKind::stationary: return "stationary";
    case BandedKind::banded: return "banded";
    case BandedKind::none: return "none";
  }
  return "?";
}

std::vector<Index> parse_index_list(const std::string& s) {
  std::vector<Index> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v < 0) throw Error("invalid non-negative integer '" + item + "' in list '" + s + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error("empty list '" + s + "'");
  return out;
}

json load_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": invalid JSON", e.byte);
  }
}

void emit(const json& report, const std::string& path) {
  if (path.empty())
    std::cout << report.dump(1) << "\n";
  else
    write_file(path, report.dump(1) + "\n");
}

}  // namespace

SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  if (!j.is_object()) throw FormatError("simulation config must be a JSON object", 0);
  try {
    c.k = j.value("k", c.k);
    c.k2 = j.value("k2", c.k2);
    c.n = j.value("n", c.n);
    c.tau = j.value("tau", c.tau);
    c.d_true = j.value("d_true", c.d_true);
    c.noise_sigma2 = j.value("noise_sigma2", c.noise_sigma2);
    c.seed = j.value("seed", c.seed);
    const std::string sep = j.value("sep_kind", std::string("legendre"));
    if (sep == "legendre") c.sep_kind = SepKind::legendre;
    else if (sep == "wiener") c.sep_kind = SepKind::wiener;
    else throw Error("unknown sep_kind '" + sep + "' (expected legendre or wiener)");
    const std::string filt = j.value("filter_kind", std::string("signed"));
    if (filt == "signed") c.filter_kind = FilterKind::signed_alternating;
    else if (filt == "epanechnikov") c.filter_kind = FilterKind::epanechnikov;
    else throw Error("unknown filter_kind '" + filt + "' (expected signed or epanechnikov)");
    const std::string prof = j.value("noise_profile", std::string("constant"));
    if (prof == "constant") c.noise_profile = NoiseProfile::constant;
    else if (prof == "ramp") c.noise_profile = NoiseProfile::ramp;
    else throw Error("unknown noise_profile '" + prof + "' (expected constant or ramp)");
  } catch (const json::exception& e) {
    throw FormatError(std::string("simulation config: ") + e.what(), 0);
  }
  c.validate();
  return c;
}

json sim_config_to_json(const SimConfig& c) {
  return json{{"k", c.k},
              {"k2", c.k2},
              {"n", c.n},
              {"tau", c.tau},
              {"d_true", c.d_true},
              {"sep_kind", c.sep_kind == SepKind::legendre ? "legendre" : "wiener"},
              {"filter_kind", c.filter_kind == FilterKind::signed_alternating ? "signed" : "epanechnikov"},
              {"noise_sigma2", c.noise_sigma2},
              {"noise_profile", c.noise_profile == NoiseProfile::constant ? "constant" : "ramp"},
              {"seed", c.seed}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  if (!j.is_object()) throw FormatError("experiment config must be a JSON object", 0);
  try {
    if (j.contains("base")) c.base = sim_config_from_json(j.at("base"));
    c.axis = parse_axis(j.value("axis", std::string("d")));
    c.values = j.at("values").get<std::vector<double>>();
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    c.reps = j.value("reps", c.reps);
    if (j.contains("cv_candidates")) c.cv_candidates = j.at("cv_candidates").get<std::vector<Index>>();
    c.folds = j.value("folds", c.folds);
    c.kind = parse_kind(j.value("banded", std::string("stationary")));
    c.bias = j.value("bias", c.bias);
  } catch (const json::exception& e) {
    throw FormatError(std::string("experiment config: ") + e.what(), 0);
  }
  if (c.values.empty()) throw Error("experiment config: 'values' must not be empty");
  return c;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"sptcov: separable-plus-banded covariance estimation"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: SPTCOV_THREADS or all cores)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a sample stack and its true model");
  std::string sim_config, sim_out, sim_truth;
  std::optional<Index> sim_k, sim_n, sim_d;
  std::optional<double> sim_tau, sim_noise;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--config", sim_config, "JSON simulation config");
  sim->add_option("--out", sim_out, "output stack file")->required();
  sim->add_option("--truth", sim_truth, "output model file for the true covariance");
  sim->add_option("--k", sim_k, "grid size");
  sim->add_option("--n", sim_n, "sample count");
  sim->add_option("--tau", sim_tau, "signal-to-noise ratio");
  sim->add_option("--d-true", sim_d, "moving-average window (odd, 0 for none)");
  sim->add_option("--noise", sim_noise, "white measurement-noise variance");
  sim->add_option("--seed", sim_seed, "random seed");

  // estimate
  auto* est = app.add_subcommand("estimate", "fit the separable-plus-banded model");
  std::string est_stack, est_out, est_truth, est_report, est_select, est_kind = "stationary";
  std::optional<Index> est_d;
  Index est_folds = 10;
  std::uint64_t est_seed = 0;
  double est_tau = 0.0;
  bool no_psd = false, no_center = false;
  est->add_option("stack", est_stack, "input stack file")->required();
  auto* opt_d = est->add_option("--d", est_d, "bandwidth");
  auto* opt_sel = est->add_option("--select", est_select, "candidate bandwidths for cross-validation, e.g. 0,1,2,3");
  opt_d->excludes(opt_sel);
  est->add_option("--banded", est_kind, "stationary | banded | none");
  est->add_option("--folds", est_folds, "cross-validation folds");
  est->add_option("--seed", est_seed, "fold shuffle seed");
  est->add_option("--penalty", est_tau, "penalty tau on the bandwidth");
  est->add_flag("--no-psd", no_psd, "skip PSD projections");
  est->add_flag("--no-center", no_center, "do not subtract the sample mean");
  est->add_option("--out", est_out, "output model file");
  est->add_option("--truth", est_truth, "true model file; adds rel_error to the report");
  est->add_option("--report", est_report, "report path (default stdout)");

  // solve
  auto* sol = app.add_subcommand("solve", "solve (C + ridge I) X = Y for a fitted model");
  std::string sol_model, sol_rhs, sol_out, sol_log;
  AdiConfig adi;
  sol->add_option("model", sol_model, "model file")->required();
  sol->add_option("--rhs", sol_rhs, "right-hand side CSV")->required();
  sol->add_option("--tol", adi.tol, "relative accuracy");
  sol->add_option("--ridge", adi.ridge, "ridge added to the operator");
  sol->add_option("--max-outer", adi.max_outer, "outer iteration cap");
  bool sol_plain = false;
  sol->add_flag("--plain", sol_plain, "plain ADI iteration with the shrinking shift (no Krylov acceleration)");
  sol->add_option("--out", sol_out, "solution CSV (default stdout)");
  sol->add_option("--log", sol_log, "iteration log CSV");

  // gof
  auto* gof = app.add_subcommand("gof", "bootstrap goodness-of-fit test");
  std::string gof_stack, gof_kind = "stationary", gof_report;
  GofConfig gcfg;
  Index gof_d = 0;
  bool gof_no_psd = false, gof_no_center = false, gof_recompute = false;
  gof->add_option("stack", gof_stack, "input stack file")->required();
  gof->add_option("--d", gof_d, "bandwidth")->required();
  gof->add_option("--I", gcfg.i_dims, "first-axis subspace rank");
  gof->add_option("--J", gcfg.j_dims, "second-axis subspace rank");
  gof->add_option("--boot", gcfg.n_boot, "bootstrap draws");
  gof->add_option("--seed", gcfg.seed, "bootstrap seed");
  gof->add_option("--banded", gof_kind, "stationary | banded | none");
  gof->add_flag("--no-psd", gof_no_psd, "skip PSD projections");
  gof->add_flag("--no-center", gof_no_center, "do not subtract the sample mean");
  gof->add_flag("--recompute-subspace", gof_recompute, "re-derive the projection subspace per draw");
  gof->add_option("--report", gof_report, "report path (default stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "timing and iteration counts over grid sizes");
  std::string bench_k = "20,40,60,80", bench_profile = "adi", bench_out;
  BenchConfig bcfg;
  bench->add_option("--K", bench_k, "grid sizes, comma separated");
  bench->add_option("--profile", bench_profile, "estimation | adi | pcg");
  bench->add_option("--n", bcfg.n, "sample count");
  bench->add_option("--tau", bcfg.tau, "signal-to-noise ratio");
  bench->add_option("--seed", bcfg.seed, "random seed");
  bench->add_option("--out", bench_out, "output CSV (default stdout)");

  // experiment
  auto* exp = app.add_subcommand("experiment", "estimation-error curves over a parameter grid");
  std::string exp_config, exp_out;
  exp->add_option("--config", exp_config, "JSON experiment config")->required();
  exp->add_option("--out", exp_out, "output CSV (default stdout)");

  // import / export
  auto* imp = app.add_subcommand("import-csv", "directory of per-sample CSV matrices to a stack file");
  std::string imp_dir, imp_out;
  imp->add_option("dir", imp_dir, "input directory")->required();
  imp->add_option("--out", imp_out, "output stack file")->required();
  auto* expo = app.add_subcommand("export-csv", "stack file to a directory of CSV matrices");
  std::string expo_stack, expo_dir;
  expo->add_option("stack", expo_stack, "input stack file")->required();
  expo->add_option("--out", expo_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (threads == 0)
      if (const char* env = std::getenv("SPTCOV_THREADS")) threads = std::atoi(env);
    if (threads < 0) throw Error("thread count must be non-negative");
    set_thread_count(threads);

    if (*sim) {
      json cfg_json = sim_config.empty() ? json::object() : load_json(sim_config);
      if (sim_k) cfg_json["k"] = *sim_k;
      if (sim_n) cfg_json["n"] = *sim_n;
      if (sim_tau) cfg_json["tau"] = *sim_tau;
      if (sim_d) cfg_json["d_true"] = *sim_d;
      if (sim_noise) cfg_json["noise_sigma2"] = *sim_noise;
      if (sim_seed) cfg_json["seed"] = *sim_seed;
      const SimConfig cfg = sim_config_from_json(cfg_json);
      const Simulation s = simulate(cfg);
      write_stack(sim_out, s.samples);
      const json canon = sim_config_to_json(cfg);
      if (!sim_truth.empty())
        write_model(sim_truth, s.truth,
                    json{{"command", "simulate"}, {"config_hash", content_hash(canon.dump())}, {"seed", cfg.seed},
                         {"config", canon}});
      return 0;
    }

    if (*est) {
      const SampleStack stack = read_stack(est_stack);
      EstimateOptions opts;
      opts.kind = parse_kind(est_kind);
      opts.psd = !no_psd;
      opts.center = !no_center;
      json report{{"schema_version", kReportSchema}, {"command", "estimate"}, {"k1", stack.k1()},
                  {"k2", stack.k2()},           {"n", stack.n()},          {"banded", kind_name(opts.kind)}};
      Bandwidth d{0};
      if (!est_select.empty()) {
        BandwidthSearch search;
        for (Index v : parse_index_list(est_select)) search.candidates.push_back(Bandwidth{v});
        search.folds = est_folds;
        search.seed = est_seed;
        search.tau = est_tau;
        search.estimate = opts;
        const BandwidthSelection sel = select_bandwidth(stack, search);
        d = sel.d;
        json table = json::array();
        for (const auto& e : sel.table) {
          json row{{"d", e.d.d}, {"valid", e.valid}};
          row["objective"] = e.valid ? json(e.objective) : json(nullptr);
          if (!e.reason.empty()) row["reason"] = e.reason;
          table.push_back(row);
        }
        report["selection"] = table;
      } else if (est_d) {
        d = Bandwidth{*est_d};
      } else {
        throw Error("estimate needs --d or --select");
      }
      check_bandwidth(d, std::min(stack.k1(), stack.k2()));
      const SepPlusBandedCov c = estimate_full(stack, d, opts);
      report["d"] = d.d;
      if (!est_truth.empty()) report["rel_error"] = rel_error(c, read_model(est_truth));
      if (!est_out.empty())
        write_model(est_out, c,
                    json{{"command", "estimate"}, {"stack_hash", content_hash(read_file(est_stack))},
                         {"seed", est_seed}});
      emit(report, est_report);
      return 0;
    }

    if (*sol) {
      const SepPlusBandedCov c = read_model(sol_model);
      const Matrix y = read_csv(sol_rhs);
      if (y.rows() != c.k1() || y.cols() != c.k2())
        throw ShapeMismatch("right-hand side is " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()) +
                            ", model grid is " + std::to_string(c.k1()) + "x" + std::to_string(c.k2()));
      adi.krylov = !sol_plain;
      const AdiResult r = adi_solve(c, y, adi);
      if (sol_out.empty())
        std::cout << format_csv(r.x);
      else
        write_csv(sol_out, r.x);
      if (!sol_log.empty()) {
        std::ostringstream log;
        log << "iteration,rho,rel_change,residual,pcg_iterations\n";
        for (std::size_t i = 0; i < r.history.size(); ++i) {
          const auto& h = r.history[i];
          log << i + 1 << ',' << h.rho << ',' << h.rel_change << ',' << h.residual << ',' << h.pcg_iterations << '\n';
        }
        write_file(sol_log, log.str());
      }
      if (!r.converged) {
        std::cerr << "sptcov: solver did not converge in " << r.outer_iterations << " outer iterations\n";
        return 2;
      }
      return 0;
    }

    if (*gof) {
      const SampleStack stack = read_stack(gof_stack);
      gcfg.d = Bandwidth{gof_d};
      check_bandwidth(gcfg.d, std::min(stack.k1(), stack.k2()));
      gcfg.estimate.kind = parse_kind(gof_kind);
      gcfg.estimate.psd = !gof_no_psd;
      gcfg.estimate.center = !gof_no_center;
      gcfg.recompute_subspace = gof_recompute;
      const GofResult r = gof_test(stack, gcfg);
      emit(json{{"schema_version", kReportSchema}, {"command", "gof"}, {"d", gof_d}, {"I", gcfg.i_dims},
                {"J", gcfg.j_dims}, {"n_boot", gcfg.n_boot}, {"seed", gcfg.seed}, {"statistic", r.statistic},
                {"p_value", r.p_value}, {"redraws", r.redraws}},
           gof_report);
      return 0;
    }

    if (*bench) {
      const BenchProfile profile = parse_profile(bench_profile);
      std::vector<BenchRow> rows;
      for (Index k : parse_index_list(bench_k)) {
        if (k < 2) throw Error("bench grid sizes must be >= 2");
        rows.push_back(run_bench(profile, k, bcfg));
      }
      const std::string csv = bench_csv(rows);
      if (bench_out.empty())
        std::cout << csv;
      else
        write_file(bench_out, csv);
      return 0;
    }

    if (*exp) {
      const ExperimentConfig cfg = experiment_config_from_json(load_json(exp_config));
      const std::string csv = experiment_csv(error_experiment(cfg));
      if (exp_out.empty())
        std::cout << csv;
      else
        write_file(exp_out, csv);
      return 0;
    }

    if (*imp) {
      write_stack(imp_out, import_csv_dir(imp_dir));
      return 0;
    }

    if (*expo) {
      export_csv_dir(read_stack(expo_stack), expo_dir);
      return 0;
    }
  } catch (const DegenerateTrace& e) {
    std::cerr << "sptcov: " << e.what() << "\n";
    return 2;
  } catch (const SingularSystem& e) {
    std::cerr << "sptcov: " << e.what() << "\n";
    return 2;
  } catch (const RankError& e) {
    std::cerr << "sptcov: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "sptcov: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace sptcov
