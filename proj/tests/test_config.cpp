#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "parorb/config.hpp"
#include "parorb/driver.hpp"
#include "parorb/errors.hpp"

using namespace parorb;

namespace {

const char* kMinimal = R"({
  "problem": {
    "dimension": 1,
    "extents": [20.0],
    "points_per_axis": [100],
    "n_orbitals": 3
  }
})";

std::string with_optimizer(const std::string& body) {
  std::ostringstream out;
  out << R"({
  "problem": {
    "dimension": 1,
    "extents": [20.0],
    "points_per_axis": [100],
    "n_orbitals": 3
  },
  "optimizer": {)"
      << body << "}\n}";
  return out.str();
}

}  // namespace

TEST_CASE("minimal config applies documented defaults") {
  RunConfig cfg = parse_config_text(kMinimal, "test");
  CHECK(cfg.optimizer.algorithm == Algorithm::kOptParMod);
  CHECK(cfg.optimizer.rho1 == 1e-4);
  CHECK(cfg.optimizer.delta == 0.1);
  CHECK(cfg.optimizer.eta == 0.85);
  CHECK(cfg.optimizer.n_diag == 100);
  CHECK(cfg.optimizer.n_org == 1);
  CHECK(cfg.optimizer.grad_tol == 1e-6);
  CHECK(cfg.optimizer.mean_abs_tol == 5e-9);
  CHECK(cfg.optimizer.energy_tol == 1e-13);
  CHECK(cfg.optimizer.convergence_mode == ConvergenceMode::kGradNorm);
  CHECK(cfg.threads == 1);
  CHECK(cfg.io.log_every == 1);
  CHECK(cfg.problem.atoms.empty());

  Problem p = build_problem(cfg.problem);
  CHECK(p.grid->num_points() == 100);
  CHECK(p.n_orbitals == 3);
}

TEST_CASE("validation errors name the offending key") {
  CHECK_THROWS_WITH_AS(parse_config_text(with_optimizer("\"delta\": 1.5"), "test"),
                       doctest::Contains("delta"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text(with_optimizer("\"eta\": -0.1"), "test"),
                       doctest::Contains("eta"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text(with_optimizer("\"bogus_key\": 1"), "test"),
                       doctest::Contains("bogus_key"), ConfigError);

  // the Table-4 setting parses cleanly
  RunConfig cfg =
      parse_config_text(with_optimizer("\"n_diag\": 50, \"n_org\": 2"), "test");
  CHECK(cfg.optimizer.n_diag == 50);
  CHECK(cfg.optimizer.n_org == 2);
}

TEST_CASE("parse errors report line and column") {
  const char* broken = "{\n  \"problem\": {\n    \"dimension\": oops\n";
  try {
    parse_config_text(broken, "broken.json");
    CHECK(false);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("broken.json") != std::string::npos);
  }
}

TEST_CASE("unknown top-level and problem keys rejected") {
  CHECK_THROWS_AS(parse_config_text(R"({"problem": {"dimension": 1,
    "extents": [1.0], "points_per_axis": [5], "n_orbitals": 1},
    "mystery": 3})",
                                    "test"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"problem": {"dimension": 1,
    "extents": [1.0], "points_per_axis": [5], "n_orbitals": 1,
    "colour": "red"}})",
                                    "test"),
                  ConfigError);
}

TEST_CASE("seed and threads") {
  RunConfig cfg = parse_config_text(R"({
    "problem": {"dimension": 1, "extents": [9.0], "points_per_axis": [30],
                "n_orbitals": 2},
    "threads": 4,
    "seed": 77
  })",
                                    "test");
  CHECK(cfg.threads == 4);
  CHECK(cfg.optimizer.seed == 77);
}

TEST_CASE("hartree mode validation happens at problem build") {
  RunConfig cfg = parse_config_text(R"({
    "problem": {"dimension": 1, "extents": [9.0], "points_per_axis": [30],
                "n_orbitals": 2, "hartree_enabled": true,
                "hartree_mode": "poisson"}
  })",
                                    "test");
  CHECK_THROWS_AS(build_problem(cfg.problem), ConfigError);
}

TEST_CASE("log row format is stable") {
  IterationRecord r;
  r.level = 0;
  r.iter = 3;
  r.energy = -1.5;
  r.grad_norm = 0.25;
  r.tau = 0.125;
  r.backtracks = 2;
  r.did_orth = true;
  r.did_diag = false;
  r.offdiag_max = 0.0078125;
  r.wall_ms = 1.2345;
  CHECK(format_log_row(r) == "0,3,-1.5,0.25,0.125,2,1,0,0.0078125,1.234");
  CHECK(log_header() ==
        "level,iter,energy,grad_norm,tau,backtracks,did_orth,did_diag,"
        "offdiag_max,wall_ms");
}

TEST_CASE("run writes logs and summary and reports exit codes") {
  const std::string dir = "/tmp/parorb_test_io";
  std::remove((dir + "_log.csv").c_str());
  std::remove((dir + "_summary.json").c_str());

  RunConfig cfg = parse_config_text(R"({
    "problem": {
      "dimension": 1, "extents": [20.0], "points_per_axis": [120],
      "atoms": [{"position": [10.0], "charge": 4.0, "softening": 1.0}],
      "n_orbitals": 3
    },
    "optimizer": {"algorithm": "opt_par", "max_inner": 4000},
    "seed": 5
  })",
                                    "test");
  cfg.io.log_path = dir + "_log.csv";
  cfg.io.summary_path = dir + "_summary.json";
  cfg.io.oracle_check = true;
  CHECK(run(cfg) == kExitConverged);

  std::ifstream log(cfg.io.log_path);
  REQUIRE(log.good());
  std::string header;
  std::getline(log, header);
  CHECK(header == log_header());
  int rows = 0;
  for (std::string line; std::getline(log, line);) ++rows;
  CHECK(rows > 10);

  std::ifstream summary(cfg.io.summary_path);
  REQUIRE(summary.good());
  std::ostringstream buf;
  buf << summary.rdbuf();
  const std::string text = buf.str();
  CHECK(text.find("\"outcome\": \"converged\"") != std::string::npos);
  CHECK(text.find("\"oracle\"") != std::string::npos);
  CHECK(text.find("\"parallel_fraction\"") != std::string::npos);

  // summary totals match the log: with log_every = 1, row count equals the
  // iteration total and the last row's energy equals the summary total
  const nlohmann::json js = nlohmann::json::parse(text);
  CHECK(js.at("iterations_total").get<int>() == rows);
  {
    std::ifstream log_again(cfg.io.log_path);
    std::string line, last;
    std::getline(log_again, line);  // header
    while (std::getline(log_again, line)) last = line;
    std::ostringstream expected;
    char num[32];
    std::snprintf(num, sizeof num, "%.17g", js.at("energy").at("total").get<double>());
    CHECK(last.find(std::string(",") + num + ",") != std::string::npos);
  }

  // forced truncation: not converged, partial log still written
  RunConfig truncated = cfg;
  truncated.optimizer.max_inner = 1;
  truncated.io.log_path = dir + "_log2.csv";
  truncated.io.summary_path = dir + "_summary2.json";
  CHECK(run(truncated) == kExitNotConverged);
  std::ifstream log2(truncated.io.log_path);
  REQUIRE(log2.good());
  std::getline(log2, header);
  rows = 0;
  for (std::string line; std::getline(log2, line);) ++rows;
  CHECK(rows == 1);

  // unwritable log path
  RunConfig bad_io = cfg;
  bad_io.io.log_path = "/nonexistent-dir/x.csv";
  CHECK(run(bad_io) == kExitIoError);
}

TEST_CASE("reduction file contains orthogonalization rows only") {
  const std::string path = "/tmp/parorb_test_reduction.csv";
  std::vector<IterationRecord> records(4);
  records[0] = {0, 0, -1.0, 0, 0.5, 0, true, false, 0.0, 0.0};
  records[1] = {0, 1, -1.0, 0, 0.5, 0, false, false, 0.0, 0.0};
  records[2] = {0, 2, -1.25, 0, 0.5, 0, true, false, 0.0, 0.0};
  records[3] = {0, 3, -1.25, 0, 0.5, 0, false, false, 0.0, 0.0};
  write_reduction(path, records, -1.25);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "iter,energy_minus_emin");
  std::getline(in, line);
  CHECK(line == "0,0.25");
  std::getline(in, line);
  CHECK(line == "2,0");
  CHECK_FALSE(std::getline(in, line));
}
