#include <doctest.h>

#include <unistd.h>

#include <iostream>
#include <sstream>

#include "../oracle/dense_oracle.hpp"
#include "sptcov/cli.hpp"
#include "sptcov/io.hpp"

using namespace sptcov;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "sptcov");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  std::ostringstream out, err;
  auto* o = std::cout.rdbuf(out.rdbuf());
  auto* e = std::cerr.rdbuf(err.rdbuf());
  const int code = run_cli(static_cast<int>(args.size()), argv.data());
  std::cout.rdbuf(o);
  std::cerr.rdbuf(e);
  return {code, out.str(), err.str()};
}

struct Dir {
  fs::path p;
  explicit Dir(const std::string& name)
      : p(fs::temp_directory_path() / ("sptcov_cli_" + std::to_string(::getpid()) + "_" + name)) {
    fs::remove_all(p);
    fs::create_directories(p);
  }
  ~Dir() { fs::remove_all(p); }
  std::string operator/(const std::string& f) const { return (p / f).string(); }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate, estimate with truth, select") {
    Dir d("est");
    REQUIRE(run({"simulate", "--k", "10", "--n", "60", "--d-true", "3", "--seed", "4", "--out", d / "s.bin", "--truth",
                 d / "t.json"})
                .code == 0);
    const SampleStack s = read_stack(d / "s.bin");
    CHECK(s.n() == 60);
    CHECK(s.k1() == 10);
    const auto truth = nlohmann::json::parse(read_file(d / "t.json"));
    CHECK(truth["provenance"]["seed"] == 4);
    CHECK(truth["provenance"]["config_hash"].get<std::string>().size() == 16);

    const Run e = run({"estimate", d / "s.bin", "--d", "3", "--truth", d / "t.json", "--out", d / "m.json"});
    REQUIRE(e.code == 0);
    const auto rep = nlohmann::json::parse(e.out);
    CHECK(rep["d"] == 3);
    CHECK(rep["n"] == 60);
    CHECK(rep["rel_error"].get<double>() > 0.0);
    CHECK(rep["rel_error"].get<double>() < 1.0);
    const SepPlusBandedCov m = read_model(d / "m.json");
    CHECK(m.d.d == 3);
    CHECK(oracle::rel(rep["rel_error"].get<double>(), rel_error(m, read_model(d / "t.json"))) < 1e-12);

    const Run sel = run({"estimate", d / "s.bin", "--select", "0,1,2,3", "--folds", "5", "--report", d / "r.json"});
    REQUIRE(sel.code == 0);
    const auto r = nlohmann::json::parse(read_file(d / "r.json"));
    CHECK(r["selection"].size() == 4);
    CHECK(r["d"].get<Index>() <= 3);

    // identical inputs, identical bytes
    const Run e2 = run({"estimate", d / "s.bin", "--d", "3", "--out", d / "m2.json"});
    REQUIRE(e2.code == 0);
    run({"estimate", d / "s.bin", "--d", "3", "--out", d / "m3.json"});
    CHECK(read_file(d / "m2.json") == read_file(d / "m3.json"));
  }

  TEST_CASE("solve: identity model returns the right-hand side") {
    Dir d("solve");
    SepPlusBandedCov id{SymMatrix(Matrix::Identity(3, 3)), SymMatrix(Matrix::Identity(4, 4)), std::monostate{},
                        Bandwidth{0}, false};
    write_model(d / "id.json", id);
    oracle::Rng rng(90);
    const Matrix y = rng.gauss(3, 4);
    write_csv(d / "y.csv", y);
    const Run r = run({"solve", d / "id.json", "--rhs", d / "y.csv", "--ridge", "0", "--log", d / "log.csv"});
    REQUIRE(r.code == 0);
    CHECK(oracle::rel(parse_csv(r.out), y) < 1e-15);
    CHECK(read_file(d / "log.csv").rfind("iteration,rho,rel_change,residual,pcg_iterations\n", 0) == 0);

    write_csv(d / "bad.csv", rng.gauss(4, 4));
    CHECK(run({"solve", d / "id.json", "--rhs", d / "bad.csv"}).code == 1);
    // singular separable part
    SepPlusBandedCov z{SymMatrix::zero(3), SymMatrix::zero(4), std::monostate{}, Bandwidth{0}, false};
    write_model(d / "z.json", z);
    CHECK(run({"solve", d / "z.json", "--rhs", d / "y.csv", "--ridge", "0"}).code == 2);
  }

  TEST_CASE("exit codes") {
    Dir d("codes");
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"estimate"}).code == 1);
    CHECK(run({"estimate", d / "missing.bin", "--d", "1"}).code == 1);
    write_stack(d / "z.bin", SampleStack({Matrix::Zero(3, 3), Matrix::Zero(3, 3)}));
    const Run none = run({"estimate", d / "z.bin"});
    CHECK(none.code == 1);
    CHECK(none.err.find("--d or --select") != std::string::npos);
    const Run deg = run({"estimate", d / "z.bin", "--d", "1"});
    CHECK(deg.code == 2);
    CHECK(!deg.err.empty());
    CHECK(run({"estimate", d / "z.bin", "--d", "9"}).code == 1);
    CHECK(run({"estimate", d / "z.bin", "--d", "1", "--select", "1,2"}).code == 1);
    write_file(d / "junk.bin", "SPTC2");
    const Run fmt = run({"estimate", d / "junk.bin", "--d", "1"});
    CHECK(fmt.code == 1);
    CHECK(fmt.err.find("magic") != std::string::npos);
    CHECK(run({"--help"}).code == 0);
  }

  TEST_CASE("gof, csv round trip, experiment, bench") {
    Dir d("misc");
    REQUIRE(run({"simulate", "--k", "8", "--n", "40", "--out", d / "s.bin"}).code == 0);
    const Run g = run({"gof", d / "s.bin", "--d", "1", "--boot", "20", "--seed", "3"});
    REQUIRE(g.code == 0);
    const auto rep = nlohmann::json::parse(g.out);
    CHECK(rep["p_value"].get<double>() >= 1.0 / 21.0);
    CHECK(rep["p_value"].get<double>() <= 1.0);
    CHECK(run({"gof", d / "s.bin", "--d", "1", "--I", "9"}).code == 2);

    REQUIRE(run({"export-csv", d / "s.bin", "--out", d / "csv"}).code == 0);
    REQUIRE(run({"import-csv", d / "csv", "--out", d / "back.bin"}).code == 0);
    CHECK(read_file(d / "s.bin") == read_file(d / "back.bin"));

    write_file(d / "exp.json",
               R"({"base": {"k": 6, "n": 20, "d_true": 3}, "axis": "N", "values": [20], "reps": 1,
                   "methods": ["SPT-d", "PT"], "folds": 2})");
    const Run x = run({"experiment", "--config", d / "exp.json"});
    REQUIRE(x.code == 0);
    CHECK(x.out.find("N,20,SPT-d,") != std::string::npos);
    CHECK(x.out.find("N,20,bias,") != std::string::npos);
    write_file(d / "bad.json", R"({"values": []})");
    CHECK(run({"experiment", "--config", d / "bad.json"}).code == 1);

    const Run b = run({"bench", "--K", "8,12", "--profile", "estimation"});
    REQUIRE(b.code == 0);
    CHECK(std::count(b.out.begin(), b.out.end(), '\n') == 3);
    CHECK(run({"bench", "--K", "8 12"}).code == 1);
  }
}
