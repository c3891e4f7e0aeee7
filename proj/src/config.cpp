#include "parorb/config.hpp"

#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "parorb/errors.hpp"

namespace parorb {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError("config: " + key + ": " + what);
}

void expect_keys(const json& obj, const std::string& scope,
                 std::initializer_list<const char*> keys) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail(scope.empty() ? it.key() : scope + "." + it.key(), "unknown key");
  }
}

template <class T>
T get_number(const json& obj, const std::string& scope, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) fail(scope + "." + key, "expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) fail(scope + "." + key, "expected an integer");
  } else {
    if (!v.is_number()) fail(scope + "." + key, "expected a number");
  }
  return v.get<T>();
}

std::string get_string(const json& obj, const std::string& scope, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(scope + "." + key, "expected a string");
  return v.get<std::string>();
}

ProblemConfig parse_problem(const json& obj) {
  expect_keys(obj, "problem",
              {"dimension", "extents", "points_per_axis", "atoms", "n_orbitals",
               "hartree_enabled", "xc_enabled", "hartree_mode"});
  ProblemConfig pc;
  if (!obj.contains("dimension")) fail("problem.dimension", "required");
  pc.dimension = get_number<int>(obj, "problem", "dimension", 1);
  if (pc.dimension < 1 || pc.dimension > 3) fail("problem.dimension", "must be 1, 2 or 3");

  auto get_array = [&](const char* key, auto& out) {
    if (!obj.contains(key)) fail(std::string("problem.") + key, "required");
    const json& arr = obj.at(key);
    if (!arr.is_array() || std::ssize(arr) != pc.dimension) {
      fail(std::string("problem.") + key, "expected an array with one entry per axis");
    }
    for (const json& v : arr) {
      if (!v.is_number()) fail(std::string("problem.") + key, "expected numeric entries");
      out.push_back(v.get<typename std::decay_t<decltype(out)>::value_type>());
    }
  };
  get_array("extents", pc.extents);
  get_array("points_per_axis", pc.points_per_axis);

  if (obj.contains("atoms")) {
    const json& atoms = obj.at("atoms");
    if (!atoms.is_array()) fail("problem.atoms", "expected an array");
    for (const json& a : atoms) {
      if (!a.is_object()) fail("problem.atoms", "expected objects");
      expect_keys(a, "problem.atoms", {"position", "charge", "softening"});
      Atom atom;
      if (!a.contains("position")) fail("problem.atoms.position", "required");
      const json& pos = a.at("position");
      if (!pos.is_array() || std::ssize(pos) != pc.dimension) {
        fail("problem.atoms.position", "expected one coordinate per axis");
      }
      for (int k = 0; k < pc.dimension; ++k) {
        if (!pos[k].is_number()) fail("problem.atoms.position", "expected numbers");
        atom.position[static_cast<std::size_t>(k)] = pos[k].get<double>();
      }
      atom.charge = get_number<double>(a, "problem.atoms", "charge", 1.0);
      atom.softening = get_number<double>(a, "problem.atoms", "softening", 1.0);
      pc.atoms.push_back(atom);
    }
  }

  if (!obj.contains("n_orbitals")) fail("problem.n_orbitals", "required");
  pc.n_orbitals = get_number<int>(obj, "problem", "n_orbitals", 1);
  if (pc.n_orbitals < 1) fail("problem.n_orbitals", "must be >= 1");
  pc.hartree_enabled = get_number<bool>(obj, "problem", "hartree_enabled", false);
  pc.xc_enabled = get_number<bool>(obj, "problem", "xc_enabled", false);
  const std::string mode = get_string(obj, "problem", "hartree_mode",
                                      pc.dimension == 3 ? "poisson" : "kernel");
  if (mode == "kernel") {
    pc.hartree_mode = HartreeMode::kKernel;
  } else if (mode == "poisson") {
    pc.hartree_mode = HartreeMode::kPoisson;
  } else {
    fail("problem.hartree_mode", "expected \"kernel\" or \"poisson\"");
  }
  return pc;
}

OptimizerParams parse_optimizer(const json& obj) {
  expect_keys(obj, "optimizer",
              {"algorithm", "bb_variant", "bb_trace_abs", "rho1", "delta", "eta",
               "n_diag", "n_org", "max_inner", "max_backtracks", "tau_min",
               "tau_max", "grad_tol", "mean_abs_tol", "energy_tol",
               "convergence_mode", "outer_levels", "seed",
               "verify_orthonormality"});
  OptimizerParams p;
  const std::string alg = get_string(obj, "optimizer", "algorithm", "opt_par_mod");
  if (alg == "optm_qr") {
    p.algorithm = Algorithm::kOptmQr;
  } else if (alg == "opt_par") {
    p.algorithm = Algorithm::kOptPar;
  } else if (alg == "opt_par_mod") {
    p.algorithm = Algorithm::kOptParMod;
  } else {
    fail("optimizer.algorithm", "expected optm_qr, opt_par or opt_par_mod");
  }
  const std::string bb = get_string(obj, "optimizer", "bb_variant", "bb1");
  if (bb == "bb1") {
    p.bb_variant = BbVariant::kBb1;
  } else if (bb == "bb2") {
    p.bb_variant = BbVariant::kBb2;
  } else if (bb == "alternate") {
    p.bb_variant = BbVariant::kAlternate;
  } else {
    fail("optimizer.bb_variant", "expected bb1, bb2 or alternate");
  }
  const std::string abs_mode = get_string(obj, "optimizer", "bb_trace_abs", "diag");
  if (abs_mode == "diag") {
    p.bb_trace_abs = BbTraceAbs::kDiagAbs;
  } else if (abs_mode == "trace") {
    p.bb_trace_abs = BbTraceAbs::kAbsTrace;
  } else {
    fail("optimizer.bb_trace_abs", "expected \"diag\" or \"trace\"");
  }
  p.rho1 = get_number<double>(obj, "optimizer", "rho1", p.rho1);
  p.delta = get_number<double>(obj, "optimizer", "delta", p.delta);
  p.eta = get_number<double>(obj, "optimizer", "eta", p.eta);
  p.n_diag = get_number<int>(obj, "optimizer", "n_diag", p.n_diag);
  p.n_org = get_number<int>(obj, "optimizer", "n_org", p.n_org);
  p.max_inner = get_number<int>(obj, "optimizer", "max_inner", p.max_inner);
  p.max_backtracks = get_number<int>(obj, "optimizer", "max_backtracks", p.max_backtracks);
  p.tau_min = get_number<double>(obj, "optimizer", "tau_min", p.tau_min);
  p.tau_max = get_number<double>(obj, "optimizer", "tau_max", p.tau_max);
  p.grad_tol = get_number<double>(obj, "optimizer", "grad_tol", p.grad_tol);
  p.mean_abs_tol = get_number<double>(obj, "optimizer", "mean_abs_tol", p.mean_abs_tol);
  p.energy_tol = get_number<double>(obj, "optimizer", "energy_tol", p.energy_tol);
  const std::string mode = get_string(obj, "optimizer", "convergence_mode", "grad_norm");
  if (mode == "grad_norm") {
    p.convergence_mode = ConvergenceMode::kGradNorm;
  } else if (mode == "mean_abs") {
    p.convergence_mode = ConvergenceMode::kMeanAbs;
  } else if (mode == "energy_change") {
    p.convergence_mode = ConvergenceMode::kEnergyChange;
  } else {
    fail("optimizer.convergence_mode", "expected grad_norm, mean_abs or energy_change");
  }
  p.outer_levels = get_number<int>(obj, "optimizer", "outer_levels", p.outer_levels);
  p.seed = get_number<std::uint64_t>(obj, "optimizer", "seed", p.seed);
  p.verify_orthonormality =
      get_number<bool>(obj, "optimizer", "verify_orthonormality", p.verify_orthonormality);
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return p;
}

IoConfig parse_io(const json& obj) {
  expect_keys(obj, "io",
              {"log_path", "summary_path", "reduction_path", "log_every",
               "emit_reduction", "oracle_check"});
  IoConfig io;
  io.log_path = get_string(obj, "io", "log_path", io.log_path);
  io.summary_path = get_string(obj, "io", "summary_path", io.summary_path);
  io.reduction_path = get_string(obj, "io", "reduction_path", io.reduction_path);
  io.log_every = get_number<int>(obj, "io", "log_every", io.log_every);
  if (io.log_every < 1) fail("io.log_every", "must be >= 1");
  io.emit_reduction = get_number<bool>(obj, "io", "emit_reduction", io.emit_reduction);
  io.oracle_check = get_number<bool>(obj, "io", "oracle_check", io.oracle_check);
  return io;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // Recover line/column from the byte offset for a usable message.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << "config: parse error in " << origin << " at line " << line << ", column "
        << col << ": " << e.what();
    throw ConfigError(msg.str());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  expect_keys(root, "", {"problem", "optimizer", "io", "threads", "seed"});
  if (!root.contains("problem")) throw ConfigError("config: problem block is required");

  RunConfig cfg;
  cfg.problem = parse_problem(root.at("problem"));
  if (root.contains("optimizer")) {
    cfg.optimizer = parse_optimizer(root.at("optimizer"));
  }
  if (root.contains("io")) cfg.io = parse_io(root.at("io"));
  cfg.threads = get_number<int>(root, "", "threads", 1);
  if (cfg.threads < 1) fail("threads", "must be >= 1");
  if (root.contains("seed")) {
    cfg.optimizer.seed = get_number<std::uint64_t>(root, "", "seed", cfg.optimizer.seed);
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

Problem build_problem(const ProblemConfig& pc) {
  try {
    GridPtr grid = build_grid(pc.dimension, pc.extents, pc.points_per_axis);
    return make_problem(grid, pc.atoms, pc.n_orbitals, pc.hartree_enabled,
                        pc.xc_enabled, pc.hartree_mode);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: problem: ") + e.what());
  }
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kOptmQr:
      return "optm_qr";
    case Algorithm::kOptPar:
      return "opt_par";
    case Algorithm::kOptParMod:
      return "opt_par_mod";
  }
  return "unknown";
}

std::string convergence_mode_name(ConvergenceMode m) {
  switch (m) {
    case ConvergenceMode::kGradNorm:
      return "grad_norm";
    case ConvergenceMode::kMeanAbs:
      return "mean_abs";
    case ConvergenceMode::kEnergyChange:
      return "energy_change";
  }
  return "unknown";
}

}  // namespace parorb
