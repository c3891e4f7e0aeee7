#pragma once

#include <optional>
#include <string>

#include "parorb/config.hpp"
#include "parorb/optimizer.hpp"

namespace parorb {

inline constexpr const char* kArtifactVersion = "parorb 0.1.0";

enum ExitCode : int {
  kExitConverged = 0,
  kExitNotConverged = 2,
  kExitStagnation = 3,
  kExitConfigError = 4,
  kExitIoError = 5,
};

struct OracleComparison {
  double dense_energy = 0.0;  // sum of the N lowest dense eigenvalues
  double abs_error = 0.0;
};

struct RunSummary {
  EnergyBreakdown energy;
  std::string outcome;
  int iterations_total = 0;
  double final_grad_norm = 0.0;
  double final_ks_residual = 0.0;
  double wall_seconds = 0.0;
  double parallel_seconds = 0.0;
  double sync_seconds = 0.0;
  double parallel_fraction = 0.0;
  std::string convergence_mode;
  double convergence_threshold = 0.0;
  std::optional<OracleComparison> oracle;
};

RunSummary make_summary(const SolveResult& result, const Problem& final_problem,
                        const RunConfig& cfg);

// One CSV row per iteration record, "%.17g" doubles so identical runs
// produce identical bytes (timing column aside).
std::string format_log_row(const IterationRecord& r);
std::string log_header();

void write_log(const std::string& path, const std::vector<IterationRecord>& records,
               int log_every);
void write_summary(const std::string& path, const RunSummary& summary,
                   const RunConfig& cfg);
// Two-column file (iter, E - E_min) over the final level's orthogonalization
// iterations, E_min being the run's final energy.
void write_reduction(const std::string& path, const std::vector<IterationRecord>& records,
                     double e_min);

// Full batch run: solve, then emit log/summary (and the reduction file when
// requested). Returns the process exit code.
int run(const RunConfig& cfg);

}  // namespace parorb
