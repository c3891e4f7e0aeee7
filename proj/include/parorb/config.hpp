#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "parorb/energy.hpp"
#include "parorb/optimizer.hpp"

namespace parorb {

struct ProblemConfig {
  int dimension = 1;
  std::vector<double> extents;
  std::vector<std::int64_t> points_per_axis;
  AtomList atoms;
  int n_orbitals = 1;
  bool hartree_enabled = false;
  bool xc_enabled = false;
  HartreeMode hartree_mode = HartreeMode::kKernel;
};

struct IoConfig {
  std::string log_path = "parorb_log.csv";
  std::string summary_path = "parorb_summary.json";
  std::string reduction_path = "parorb_reduction.csv";
  int log_every = 1;
  bool emit_reduction = false;
  bool oracle_check = false;
};

struct RunConfig {
  ProblemConfig problem;
  OptimizerParams optimizer;
  IoConfig io;
  int threads = 1;
};

// Strict parse: unknown keys are rejected, every value is type- and
// range-checked, defaults fill whatever is omitted. Throws ConfigError
// (parse errors carry line/column, validation errors name the key).
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

Problem build_problem(const ProblemConfig& pc);

std::string algorithm_name(Algorithm a);
std::string convergence_mode_name(ConvergenceMode m);

}  // namespace parorb
