#pragma once

// Command-line front end. Seven subcommands share one option surface:
//
//   s3          split sensitivity of stationary averages
//   fd          central-difference Monte Carlo baseline
//   ensemble    ensemble tangent estimator with variance profile
//   ulam        cell-transfer sensitivity oracle (1-D circle maps)
//   lyapunov    Lyapunov exponents and expanding-direction count
//   compare     z-test of an s3 result file against an fd result file
//   check-model derivative self-check of a model implementation
//
// Options can come from an INI-style config file (--config, with one
// section per subcommand); explicit flags win over file values and unknown
// file keys are rejected. Every output CSV echoes the fully resolved
// configuration as comment lines. Exit codes: 0 success, 2 configuration
// or usage error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "splitsens/baselines.hpp"
#include "splitsens/core.hpp"
#include "splitsens/io.hpp"
#include "splitsens/models.hpp"
#include "splitsens/objectives.hpp"
#include "splitsens/sensitivity.hpp"

namespace splitsens::cli {

struct RunOptions {
  std::string model = "solenoid";
  std::vector<double> params;  // empty = model defaults
  int param_index = 0;

  std::string objective = "trig";
  int axis = -1;  // -1 = first periodic coordinate, else coordinate 0
  int nodes = 16;
  int axis2 = -1;
  int nodes2 = 16;
  double grid_lo = 0.0;
  double grid_hi = 1.0;

  long K = 1000000;
  long burn_in = 1000;
  long M = 500;
  int L = 50;
  int warm_up = kDefaultWarmUp;
  int div_chain = kDefaultDivChain;
  double div_step = kDefaultDivStep;
  int m = -1;
  int d_trial = -1;
  double tol = 0.05;

  double delta = 1e-3;
  long n_samples = 100000;
  long horizon = 1;
  long ensemble_horizon = 13;
  int n_cells = 4096;
  int subdiv = 64;

  double z_threshold = 3.0;
  std::uint64_t seed = 0;
  std::string out;

  std::string compare_s3;
  std::string compare_fd;
};

inline Vec resolved_params(const MapModel& model, const std::vector<double>& given) {
  if (given.empty()) return model.default_params();
  if (static_cast<int>(given.size()) != model.num_params())
    throw config_error("model '" + model.id() + "' takes " +
                       std::to_string(model.num_params()) + " parameters, got " +
                       std::to_string(given.size()));
  Vec s(static_cast<Eigen::Index>(given.size()));
  for (std::size_t i = 0; i < given.size(); ++i) s(static_cast<Eigen::Index>(i)) = given[i];
  return s;
}

inline ObjectiveSpec resolved_objective(const MapModel& model, const RunOptions& opt) {
  ObjectiveSpec spec;
  spec.kind = opt.objective;
  spec.axis = opt.axis;
  if (spec.axis < 0) {
    spec.axis = 0;
    const Vec periods = model.coord_periods();
    for (int l = 0; l < model.dim(); ++l)
      if (periods(l) > 0) {
        spec.axis = l;
        break;
      }
  }
  spec.nodes = opt.nodes;
  spec.axis2 = opt.axis2;
  spec.nodes2 = opt.nodes2;
  spec.lo = opt.grid_lo;
  spec.hi = opt.grid_hi;
  return spec;
}

inline std::string join_params(const Vec& s) {
  std::string out;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += fmt17(s(i));
  }
  return out;
}

// Configuration echo shared by all model-running commands. Only resolved
// values appear; a rerun from these lines reproduces the file byte for byte.
inline void echo_common(CsvTable& t, const std::string& command, const MapModel& model,
                        const Vec& params, const RunOptions& opt) {
  t.header.emplace_back("command", command);
  t.header.emplace_back("model", model.id());
  t.header.emplace_back("params", join_params(params));
  t.header.emplace_back("param_index", std::to_string(opt.param_index));
  t.header.emplace_back("seed", std::to_string(opt.seed));
}

inline void echo_objective(CsvTable& t, const ObjectiveSpec& spec) {
  t.header.emplace_back("objective", spec.kind);
  t.header.emplace_back("axis", std::to_string(spec.axis));
  if (spec.kind == "nodal" || spec.kind == "nodal2") {
    t.header.emplace_back("nodes", std::to_string(spec.nodes));
    t.header.emplace_back("grid_lo", fmt17(spec.lo));
    t.header.emplace_back("grid_hi", fmt17(spec.hi));
  }
  if (spec.kind == "nodal2") {
    t.header.emplace_back("axis2", std::to_string(spec.axis2));
    t.header.emplace_back("nodes2", std::to_string(spec.nodes2));
  }
}

inline void emit(const CsvTable& t, const std::string& out_path) {
  if (!out_path.empty()) write_csv(out_path, t);
  // Mirror the table to stdout so interactive runs need no output file.
  for (const auto& [k, v] : t.header) std::cout << "# " << k << " = " << v << "\n";
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    std::cout << (c ? "," : "") << t.columns[c];
  std::cout << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) std::cout << (c ? "," : "") << row[c];
    std::cout << "\n";
  }
}

inline int cmd_s3(const RunOptions& opt) {
  auto model = make_model(opt.model);
  const Vec params = resolved_params(*model, opt.params);
  const ObjectiveSpec ospec = resolved_objective(*model, opt);
  const auto objs = make_objectives(*model, ospec);

  SensitivityConfig cfg;
  cfg.K = opt.K;
  cfg.burn_in = opt.burn_in;
  cfg.M = opt.M;
  cfg.L = opt.L;
  cfg.warm_up = opt.warm_up;
  cfg.div_chain = opt.div_chain;
  cfg.div_step = opt.div_step;
  cfg.m = opt.m;
  cfg.d_trial = opt.d_trial;
  cfg.detect_tol = opt.tol;
  cfg.seed = opt.seed;

  SensitivityResult res = run_split_sensitivity(*model, params, opt.param_index, objs, cfg);

  CsvTable t;
  echo_common(t, "s3", *model, params, opt);
  echo_objective(t, ospec);
  t.header.emplace_back("K", std::to_string(cfg.K));
  t.header.emplace_back("burn_in", std::to_string(cfg.burn_in));
  t.header.emplace_back("M", std::to_string(cfg.M));
  t.header.emplace_back("L", std::to_string(cfg.L));
  t.header.emplace_back("warm_up", std::to_string(cfg.warm_up));
  t.header.emplace_back("div_chain", std::to_string(cfg.div_chain));
  t.header.emplace_back("div_step", fmt17(cfg.div_step));
  t.header.emplace_back("m", std::to_string(res.m));
  t.header.emplace_back("m_confirmed", res.m_confirmed ? "true" : "false");
  t.columns = {"objective_id", "stable", "unstable", "total", "diag_tail",
               "K",            "M",      "L",        "seed"};
  for (const auto& s : res.objectives)
    t.rows.push_back({s.id, fmt17(s.stable), fmt17(s.unstable), fmt17(s.total),
                      fmt17(s.tail_value), std::to_string(cfg.K), std::to_string(cfg.M),
                      std::to_string(cfg.L), std::to_string(opt.seed)});
  emit(t, opt.out);
  return 0;
}

inline int cmd_fd(const RunOptions& opt) {
  auto model = make_model(opt.model);
  const Vec params = resolved_params(*model, opt.params);
  const ObjectiveSpec ospec = resolved_objective(*model, opt);
  const auto objs = make_objectives(*model, ospec);

  FdConfig cfg;
  cfg.delta = opt.delta;
  cfg.n_samples = opt.n_samples;
  cfg.burn_in = opt.burn_in;
  cfg.horizon = opt.horizon;
  cfg.seed = opt.seed;

  auto est = fd_sensitivity(*model, params, opt.param_index, objs, cfg);

  CsvTable t;
  echo_common(t, "fd", *model, params, opt);
  echo_objective(t, ospec);
  t.header.emplace_back("delta", fmt17(cfg.delta));
  t.header.emplace_back("n_samples", std::to_string(cfg.n_samples));
  t.header.emplace_back("burn_in", std::to_string(cfg.burn_in));
  t.header.emplace_back("horizon", std::to_string(cfg.horizon));
  t.columns = {"objective_id", "estimate", "stderr", "n_samples", "delta", "seed"};
  for (const auto& e : est)
    t.rows.push_back({e.id, fmt17(e.estimate), fmt17(e.std_error),
                      std::to_string(e.n_samples), fmt17(cfg.delta),
                      std::to_string(opt.seed)});
  emit(t, opt.out);
  return 0;
}

inline int cmd_ensemble(const RunOptions& opt) {
  auto model = make_model(opt.model);
  const Vec params = resolved_params(*model, opt.params);
  const ObjectiveSpec ospec = resolved_objective(*model, opt);
  const auto objs = make_objectives(*model, ospec);

  EnsembleConfig cfg;
  cfg.horizon = opt.ensemble_horizon;
  cfg.n_samples = opt.n_samples;
  cfg.burn_in = opt.burn_in;
  cfg.seed = opt.seed;

  auto res = ensemble_sensitivity(*model, params, opt.param_index, objs, cfg);

  CsvTable t;
  echo_common(t, "ensemble", *model, params, opt);
  echo_objective(t, ospec);
  t.header.emplace_back("horizon", std::to_string(cfg.horizon));
  t.header.emplace_back("n_samples", std::to_string(cfg.n_samples));
  t.header.emplace_back("burn_in", std::to_string(cfg.burn_in));
  for (const auto& r : res)
    t.header.emplace_back("estimate_" + r.id, fmt17(r.estimate));
  t.columns = {"objective_id", "i", "summand_mean", "summand_variance"};
  for (const auto& r : res)
    for (std::size_t i = 0; i < r.summand_mean.size(); ++i)
      t.rows.push_back({r.id, std::to_string(i), fmt17(r.summand_mean[i]),
                        fmt17(r.summand_var[i])});
  emit(t, opt.out);
  return 0;
}

inline int cmd_ulam(const RunOptions& opt) {
  auto model = make_model(opt.model);
  const Vec params = resolved_params(*model, opt.params);
  const ObjectiveSpec ospec = resolved_objective(*model, opt);
  const auto objs = make_objectives(*model, ospec);

  UlamConfig cfg;
  cfg.n_cells = opt.n_cells;
  cfg.subdiv = opt.subdiv;
  cfg.delta = opt.delta;

  auto est = ulam_sensitivity(*model, params, opt.param_index, objs, cfg);

  CsvTable t;
  echo_common(t, "ulam", *model, params, opt);
  echo_objective(t, ospec);
  t.header.emplace_back("n_cells", std::to_string(cfg.n_cells));
  t.header.emplace_back("subdiv", std::to_string(cfg.subdiv));
  t.header.emplace_back("delta", fmt17(cfg.delta));
  t.columns = {"objective_id", "sensitivity", "n_cells", "delta"};
  for (const auto& e : est)
    t.rows.push_back({e.id, fmt17(e.sensitivity), std::to_string(cfg.n_cells),
                      fmt17(cfg.delta)});
  emit(t, opt.out);
  return 0;
}

inline int cmd_lyapunov(const RunOptions& opt) {
  auto model = make_model(opt.model);
  const Vec params = resolved_params(*model, opt.params);

  std::mt19937_64 init_rng(derive_seed(opt.seed, 4));
  Vec u0 = model->sample_state(init_rng, params);
  Trajectory traj =
      Trajectory::evolve(*model, params, 0, u0, opt.burn_in, opt.K);
  const int d = opt.d_trial > 0 ? opt.d_trial : model->dim();
  UnstableCount uc =
      detect_num_unstable(traj, d, opt.tol, opt.warm_up, opt.seed, traj.K());

  CsvTable t;
  echo_common(t, "lyapunov", *model, params, opt);
  t.header.emplace_back("K", std::to_string(opt.K));
  t.header.emplace_back("burn_in", std::to_string(opt.burn_in));
  t.header.emplace_back("warm_up", std::to_string(opt.warm_up));
  t.header.emplace_back("d_trial", std::to_string(d));
  t.header.emplace_back("tol", fmt17(opt.tol));
  t.header.emplace_back("m", std::to_string(uc.m));
  t.header.emplace_back("m_confirmed", uc.confirmed ? "true" : "false");
  t.columns = {"index", "exponent", "stderr"};
  for (Eigen::Index j = 0; j < uc.spectrum.exponents.size(); ++j)
    t.rows.push_back({std::to_string(j), fmt17(uc.spectrum.exponents(j)),
                      fmt17(uc.spectrum.std_errors(j))});
  emit(t, opt.out);
  return 0;
}

inline int cmd_check_model(const RunOptions& opt) {
  auto model = make_model(opt.model);
  const Vec params = resolved_params(*model, opt.params);
  ModelCheckResult res = check_model(*model, params, 64, opt.seed);

  CsvTable t;
  echo_common(t, "check-model", *model, params, opt);
  t.header.emplace_back("num_states", std::to_string(res.num_states));
  t.columns = {"check", "max_rel_error"};
  t.rows.push_back({"jacobian_vs_fd", fmt17(res.max_jacobian_err)});
  t.rows.push_back({"param_deriv_vs_fd", fmt17(res.max_param_deriv_err)});
  t.rows.push_back({"det_vs_jacobian", fmt17(res.max_det_err)});
  t.rows.push_back({"det_grad_vs_fd", fmt17(res.max_det_grad_err)});
  emit(t, opt.out);
  return 0;
}

inline int cmd_compare(const RunOptions& opt) {
  CsvTable s3 = read_csv(opt.compare_s3);
  CsvTable fd = read_csv(opt.compare_fd);
  const int s3_id = csv_column(s3, "objective_id");
  const int s3_total = csv_column(s3, "total");
  const int fd_id = csv_column(fd, "objective_id");
  const int fd_est = csv_column(fd, "estimate");
  const int fd_err = csv_column(fd, "stderr");

  if (s3.rows.size() != fd.rows.size())
    throw config_error("compare: result files have different objective counts");

  CsvTable t;
  t.header.emplace_back("command", "compare");
  t.header.emplace_back("s3_file", opt.compare_s3);
  t.header.emplace_back("fd_file", opt.compare_fd);
  t.header.emplace_back("z_threshold", fmt17(opt.z_threshold));
  t.columns = {"objective_id", "s3_total", "fd_estimate", "fd_stderr",
               "abs_diff",     "z",        "pass"};
  for (std::size_t r = 0; r < s3.rows.size(); ++r) {
    const std::string& id = s3.rows[r][s3_id];
    if (id != fd.rows[r][fd_id])
      throw config_error("compare: objective id mismatch at row " + std::to_string(r) +
                         " ('" + id + "' vs '" + fd.rows[r][fd_id] + "')");
    const double a = std::stod(s3.rows[r][s3_total]);
    const double b = std::stod(fd.rows[r][fd_est]);
    const double se = std::stod(fd.rows[r][fd_err]);
    const double diff = std::abs(a - b);
    // Degenerate stderr (perfectly coupled samples) would make any nonzero
    // difference an automatic failure; floor it at machine scale instead of
    // dividing by zero.
    const double z = diff / std::max(se, 1e-300);
    t.rows.push_back({id, fmt17(a), fmt17(b), fmt17(se), fmt17(diff), fmt17(z),
                      z <= opt.z_threshold ? "true" : "false"});
  }
  emit(t, opt.out);
  return 0;
}

inline void add_model_options(CLI::App* cmd, RunOptions& opt) {
  cmd->add_option("--model", opt.model, "map model id")->capture_default_str();
  cmd->add_option("--params", opt.params,
                  "model parameters, comma separated (default: model's)")
      ->delimiter(',');
  cmd->add_option("--param-index", opt.param_index, "parameter to differentiate against")
      ->capture_default_str();
  cmd->add_option("--seed", opt.seed, "master seed; fixes every random choice")
      ->capture_default_str();
  cmd->add_option("--out", opt.out, "output CSV path");
}

inline void add_objective_options(CLI::App* cmd, RunOptions& opt) {
  cmd->add_option("--objective", opt.objective, "objective kind: trig|coord|nodal|nodal2")
      ->capture_default_str();
  cmd->add_option("--axis", opt.axis, "coordinate axis (default: first periodic)")
      ->capture_default_str();
  cmd->add_option("--nodes", opt.nodes, "nodal grid size")->capture_default_str();
  cmd->add_option("--axis2", opt.axis2, "second axis for nodal2")->capture_default_str();
  cmd->add_option("--nodes2", opt.nodes2, "nodal2 grid size on second axis")
      ->capture_default_str();
  cmd->add_option("--grid-lo", opt.grid_lo, "nodal grid start (non-periodic axes)")
      ->capture_default_str();
  cmd->add_option("--grid-hi", opt.grid_hi, "nodal grid end (non-periodic axes)")
      ->capture_default_str();
}

inline int run(int argc, const char* const* argv) {
  RunOptions opt;
  CLI::App app{"sensitivity analysis of stationary averages of chaotic maps"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI config file; one section per subcommand");
  app.allow_config_extras(false);

  CLI::App* s3 = app.add_subcommand("s3", "split sensitivity of stationary averages");
  add_model_options(s3, opt);
  add_objective_options(s3, opt);
  s3->add_option("--K", opt.K, "measured orbit length")->capture_default_str();
  s3->add_option("--burn-in", opt.burn_in, "discarded transient steps")
      ->capture_default_str();
  s3->add_option("--M", opt.M, "accumulation discard")->capture_default_str();
  s3->add_option("--L", opt.L, "correlation truncation")->capture_default_str();
  s3->add_option("--warm-up", opt.warm_up, "frame warm-up steps")->capture_default_str();
  s3->add_option("--div-chain", opt.div_chain, "divergence re-convergence chain length")
      ->capture_default_str();
  s3->add_option("--div-step", opt.div_step, "divergence probe step")
      ->capture_default_str();
  s3->add_option("--m", opt.m, "expanding directions (-1 = detect)")
      ->capture_default_str();
  s3->add_option("--d-trial", opt.d_trial, "trial dimension for detection")
      ->capture_default_str();
  s3->add_option("--tol", opt.tol, "detection exponent tolerance")->capture_default_str();

  CLI::App* fd = app.add_subcommand("fd", "central-difference Monte Carlo baseline");
  add_model_options(fd, opt);
  add_objective_options(fd, opt);
  fd->add_option("--delta", opt.delta, "parameter offset")->capture_default_str();
  fd->add_option("--n-samples", opt.n_samples, "Monte Carlo samples")
      ->capture_default_str();
  fd->add_option("--burn-in", opt.burn_in, "per-sample burn-in steps")
      ->capture_default_str();
  fd->add_option("--horizon", opt.horizon, "states averaged per orbit")
      ->capture_default_str();

  CLI::App* ens = app.add_subcommand("ensemble", "ensemble tangent estimator");
  add_model_options(ens, opt);
  add_objective_options(ens, opt);
  ens->add_option("--horizon", opt.ensemble_horizon, "tangent steps per sample")
      ->capture_default_str();
  ens->add_option("--n-samples", opt.n_samples, "Monte Carlo samples")
      ->capture_default_str();
  ens->add_option("--burn-in", opt.burn_in, "per-sample burn-in steps")
      ->capture_default_str();

  CLI::App* ul = app.add_subcommand("ulam", "cell-transfer sensitivity (1-D circle maps)");
  add_model_options(ul, opt);
  add_objective_options(ul, opt);
  ul->add_option("--n-cells", opt.n_cells, "number of cells")->capture_default_str();
  ul->add_option("--subdiv", opt.subdiv, "subintervals per cell")->capture_default_str();
  ul->add_option("--delta", opt.delta, "parameter offset")->capture_default_str();

  CLI::App* ly = app.add_subcommand("lyapunov", "Lyapunov exponents and expanding count");
  add_model_options(ly, opt);
  ly->add_option("--K", opt.K, "orbit length")->capture_default_str();
  ly->add_option("--burn-in", opt.burn_in, "discarded transient steps")
      ->capture_default_str();
  ly->add_option("--warm-up", opt.warm_up, "frame warm-up steps")->capture_default_str();
  ly->add_option("--d-trial", opt.d_trial, "trial dimension (-1 = full)")
      ->capture_default_str();
  ly->add_option("--tol", opt.tol, "exponent tolerance")->capture_default_str();

  CLI::App* cmp = app.add_subcommand("compare", "z-test an s3 result against an fd result");
  cmp->add_option("s3_csv", opt.compare_s3, "s3 result file")->required();
  cmp->add_option("fd_csv", opt.compare_fd, "fd result file")->required();
  cmp->add_option("--z-threshold", opt.z_threshold, "pass threshold")
      ->capture_default_str();
  cmp->add_option("--out", opt.out, "output CSV path");

  CLI::App* chk = app.add_subcommand("check-model", "model derivative self-check");
  add_model_options(chk, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return 2;
  }

  try {
    if (app.got_subcommand(s3)) return cmd_s3(opt);
    if (app.got_subcommand(fd)) return cmd_fd(opt);
    if (app.got_subcommand(ens)) return cmd_ensemble(opt);
    if (app.got_subcommand(ul)) return cmd_ulam(opt);
    if (app.got_subcommand(ly)) return cmd_lyapunov(opt);
    if (app.got_subcommand(cmp)) return cmd_compare(opt);
    if (app.got_subcommand(chk)) return cmd_check_model(opt);
  } catch (const config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;  // unreachable with require_subcommand(1)
}

}  // namespace splitsens::cli
