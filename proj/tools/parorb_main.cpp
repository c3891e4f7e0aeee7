#include <CLI11.hpp>
#include <iostream>

#include "parorb/driver.hpp"
#include "parorb/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"parorb: orbital-parallel total-energy minimizer"};
  app.require_subcommand(1);

  CLI::App* run_cmd = app.add_subcommand("run", "run a solve described by a config file");
  std::string config_path;
  run_cmd->add_option("config", config_path, "path to the JSON run config")->required();
  int threads = 0;
  run_cmd->add_option("--threads", threads, "worker count (overrides config)");
  std::int64_t seed = -1;
  run_cmd->add_option("--seed", seed, "RNG seed (overrides config)");
  int log_every = 0;
  run_cmd->add_option("--log-every", log_every, "log every k-th iteration (overrides config)");
  bool emit_reduction = false;
  run_cmd->add_flag("--emit-reduction", emit_reduction,
                    "also write the (iter, E - E_min) reduction file");
  bool oracle_check = false;
  run_cmd->add_flag("--oracle-check", oracle_check,
                    "append KS-residual / dense-eigensolver checks to the summary");

  CLI11_PARSE(app, argc, argv);

  parorb::RunConfig cfg;
  try {
    cfg = parorb::parse_config(config_path);
  } catch (const parorb::IoError& e) {
    std::cerr << e.what() << '\n';
    return parorb::kExitIoError;
  } catch (const parorb::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return parorb::kExitConfigError;
  }

  if (threads > 0) cfg.threads = threads;
  if (seed >= 0) cfg.optimizer.seed = static_cast<std::uint64_t>(seed);
  if (log_every > 0) cfg.io.log_every = log_every;
  if (emit_reduction) cfg.io.emit_reduction = true;
  if (oracle_check) cfg.io.oracle_check = true;

  return parorb::run(cfg);
}
