// Command-line front end: configuration ingestion, subcommand dispatch and
// deterministic artifact emission.
//
//   metacog simulate|end2end|learn-fitness|oracle <config>
//           [--out DIR] [--seed N] [--emit-plotscript]
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure. The
// oracle subcommand exits 1 when a comparison exceeds its tolerance.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "metacog/gp/posterior.hpp"
#include "metacog/io/config.hpp"
#include "metacog/io/csv.hpp"
#include "metacog/monitor/fitness.hpp"
#include "metacog/orchestrator.hpp"
#include "metacog/rl/policy_iteration.hpp"
#include "metacog/rl/riccati.hpp"
#include "metacog/sim/plant.hpp"
#include "metacog/sim/simulate.hpp"
#include "metacog/stl/ast.hpp"
#include "metacog/stl/robustness.hpp"
#include "oracles.hpp"

namespace {

using namespace metacog;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Logging, gated by METACOG_LOG in {error, warn, info, debug}.
// ---------------------------------------------------------------------------

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("METACOG_LOG");
    const std::string v = env ? env : "warn";
    if (v == "error") return 0;
    if (v == "warn") return 1;
    if (v == "info") return 2;
    if (v == "debug") return 3;
    return 1;
  }();
  return level;
}

void log_at(int level, const std::string& tag, const std::string& msg) {
  if (log_level() >= level) std::cerr << "[" << tag << "] " << msg << "\n";
}
void log_info(const std::string& msg) { log_at(2, "info", msg); }
void log_debug(const std::string& msg) { log_at(3, "debug", msg); }

// ---------------------------------------------------------------------------
// Configuration schema and episode assembly.
// ---------------------------------------------------------------------------

const std::map<std::string, std::set<std::string>>& run_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"vehicle", {"m_T", "I_T", "v_T", "k_f", "k_r", "a", "b"}},
      {"scenario",
       {"horizon", "dt", "delta_v", "change_time", "switch_time", "seed", "x0",
        "eval_horizon"}},
      {"stl", {"eps", "setpoint", "safety", "rho_min"}},
      {"fitness",
       {"a", "T", "beta", "delta", "varpi", "t_s", "rm_cap", "noise", "base_points",
        "rearm_delay", "ls_x", "ls_theta"}},
      {"sbo", {"budget", "beta_k", "p_min", "noise_w2", "lengthscale_factor", "lo", "hi", "res"}},
      {"rl", {"gamma", "N", "T_int", "eps", "max_iter", "noise_amp", "adapt_noise_amp", "q0",
              "r0"}},
      {"output", {"dir"}},
  };
  return schema;
}

Eigen::VectorXd get_vector(const io::ConfigDoc& doc, const std::string& section,
                           const std::string& key, const Eigen::VectorXd& fallback) {
  if (!doc.has(section, key)) return fallback;
  return doc.require(section, key).as_vector();
}

sim::VehicleParams vehicle_from(const io::ConfigDoc& doc) {
  if (doc.sections().find("vehicle") == doc.sections().end())
    throw ConfigError("missing [vehicle] section (vehicle.m_T .. vehicle.b)");
  sim::VehicleParams p;
  p.m_T = doc.get_double("vehicle", "m_T", p.m_T);
  p.I_T = doc.get_double("vehicle", "I_T", p.I_T);
  p.v_T = doc.get_double("vehicle", "v_T", p.v_T);
  p.k_f = doc.get_double("vehicle", "k_f", p.k_f);
  p.k_r = doc.get_double("vehicle", "k_r", p.k_r);
  p.a = doc.get_double("vehicle", "a", p.a);
  p.b = doc.get_double("vehicle", "b", p.b);
  p.validate();
  return p;
}

// Split "pred1 ; pred2 ; ..." and parse each as a predicate formula over
// the state schema x1..xn.
std::vector<stl::Predicate> parse_safety(const std::string& text,
                                         const std::vector<std::string>& schema) {
  std::vector<stl::Predicate> preds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = item.find_last_not_of(" \t");
    const std::string trimmed = item.substr(first, last - first + 1);
    const stl::FormulaPtr f = stl::parse_formula(trimmed, schema);
    if (f->kind != stl::FormulaKind::Pred)
      throw ConfigError("stl.safety entries must be plain predicates, got: " + trimmed);
    preds.push_back(f->pred);
  }
  return preds;
}

orchestrator::EpisodeConfig episode_from(const io::ConfigDoc& doc,
                                         std::optional<long> seed_override) {
  doc.check_known(run_schema());

  orchestrator::EpisodeConfig cfg;
  const sim::VehicleParams vp = vehicle_from(doc);
  cfg.plant = sim::vehicle_matrices(vp);
  const Eigen::Index n = cfg.plant.state_dim();
  const Eigen::Index m = cfg.plant.input_dim();

  // --- [scenario]
  cfg.horizon = doc.get_double("scenario", "horizon", 12.0);
  cfg.dt = doc.get_double("scenario", "dt", 1e-3);
  cfg.eval_horizon = doc.get_double("scenario", "eval_horizon", 6.0);
  if (seed_override) {
    cfg.seed = static_cast<std::uint64_t>(*seed_override);
  } else {
    if (!doc.has("scenario", "seed"))
      throw ConfigError("scenario.seed is mandatory (or pass --seed)");
    cfg.seed = static_cast<std::uint64_t>(doc.require("scenario", "seed").as_int());
  }
  cfg.x0 = get_vector(doc, "scenario", "x0", Eigen::VectorXd::Zero(n));
  if (doc.has("scenario", "change_time")) {
    const double dv = doc.get_double("scenario", "delta_v", -20.0);
    sim::LtiPlant changed = sim::perturbed_matrices(vp, dv);
    cfg.schedule.change_time = doc.require("scenario", "change_time").as_double();
    cfg.schedule.changed_plant = changed;
  }

  // --- [rl] (also houses the initial reward hyperparameters)
  cfg.rl.gamma = doc.get_double("rl", "gamma", cfg.rl.gamma);
  cfg.rl.N = static_cast<int>(doc.get_int("rl", "N", cfg.rl.N));
  cfg.rl.T_int = doc.get_double("rl", "T_int", cfg.rl.T_int);
  cfg.rl.eps = doc.get_double("rl", "eps", cfg.rl.eps);
  cfg.rl.max_iter = static_cast<int>(doc.get_int("rl", "max_iter", cfg.rl.max_iter));
  cfg.rl.noise_amp = doc.get_double("rl", "noise_amp", cfg.rl.noise_amp);
  cfg.rl.adapt_noise_amp = doc.get_double("rl", "adapt_noise_amp", cfg.rl.adapt_noise_amp);
  cfg.theta0.q_diag = get_vector(doc, "rl", "q0", Eigen::VectorXd::Constant(n, 10.0));
  cfg.theta0.r_diag = get_vector(doc, "rl", "r0", Eigen::VectorXd::Constant(m, 2.0));

  // --- [stl]
  Eigen::VectorXd setpoint = Eigen::VectorXd::Zero(n);
  setpoint[0] = 1.0;
  cfg.theta0.setpoint = get_vector(doc, "stl", "setpoint", setpoint);
  cfg.stack.setpoint = cfg.theta0.setpoint;
  // The commanded maneuver: before switch_time the loop tracks the origin,
  // after it the configured setpoint.
  if (doc.has("scenario", "switch_time"))
    cfg.stack.setpoint_time = doc.require("scenario", "switch_time").as_double();
  cfg.stack.eps = doc.get_double("stl", "eps", 0.3);
  cfg.rho_min = doc.get_double("stl", "rho_min", cfg.rho_min);
  // Predicates may reference the state (x1..xn) and the active reference
  // (R1..Rn).
  std::vector<std::string> schema;
  for (Eigen::Index i = 0; i < n; ++i) schema.push_back("x" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < n; ++i) schema.push_back("R" + std::to_string(i + 1));
  const std::string default_safety = "4 * (1 - abs(x1 - R1)) > 0";
  cfg.stack.safety = parse_safety(doc.get_string("stl", "safety", default_safety), schema);

  // --- [fitness]
  cfg.fitness.a = doc.get_double("fitness", "a", cfg.fitness.a);
  cfg.fitness.T = doc.get_double("fitness", "T", cfg.fitness.T);
  cfg.fitness.beta = doc.get_double("fitness", "beta", cfg.fitness.beta);
  cfg.fitness.delta = doc.get_double("fitness", "delta", cfg.fitness.delta);
  cfg.fitness.varpi = doc.get_double("fitness", "varpi", cfg.fitness.varpi);
  cfg.fitness.t_s = doc.get_double("fitness", "t_s", cfg.fitness.t_s);
  cfg.fitness.rm_cap = doc.get_double("fitness", "rm_cap", cfg.fitness.rm_cap);
  cfg.fitness.eps = cfg.stack.eps;
  cfg.fitness_noise = doc.get_double("fitness", "noise", cfg.fitness_noise);
  if (doc.has("fitness", "ls_x")) {
    Eigen::VectorXd ls = doc.require("fitness", "ls_x").as_vector();
    cfg.ls_x = ls.size() == 1 ? Eigen::VectorXd::Constant(n, ls[0]).eval() : ls;
  }
  if (doc.has("fitness", "ls_theta")) cfg.ls_theta = doc.require("fitness", "ls_theta").as_vector();
  cfg.base_points = static_cast<int>(doc.get_int("fitness", "base_points", cfg.base_points));
  cfg.rearm_delay = doc.get_double("fitness", "rearm_delay", cfg.rearm_delay);

  // --- [sbo]
  cfg.sbo.budget = static_cast<int>(doc.get_int("sbo", "budget", cfg.sbo.budget));
  cfg.sbo.beta_k = doc.get_double("sbo", "beta_k", cfg.sbo.beta_k);
  cfg.sbo.p_min = doc.get_double("sbo", "p_min", 0.0);  // 0: derived default
  cfg.sbo.noise_w2 = doc.get_double("sbo", "noise_w2", cfg.sbo.noise_w2);
  cfg.sbo.lengthscale_factor =
      doc.get_double("sbo", "lengthscale_factor", cfg.sbo.lengthscale_factor);
  const Eigen::VectorXd theta_flat = cfg.theta0.flatten();
  // Default grid: first Q coordinate searched over [1, 101], all other
  // coordinates pinned at their initial values.
  Eigen::VectorXd lo = theta_flat, hi = theta_flat;
  Eigen::VectorXd res_default = Eigen::VectorXd::Ones(theta_flat.size());
  lo[0] = 1.0;
  hi[0] = 101.0;
  res_default[0] = 11;
  cfg.grid.lo = get_vector(doc, "sbo", "lo", lo);
  cfg.grid.hi = get_vector(doc, "sbo", "hi", hi);
  const Eigen::VectorXd res = get_vector(doc, "sbo", "res", res_default);
  cfg.grid.resolution.resize(res.size());
  for (Eigen::Index i = 0; i < res.size(); ++i)
    cfg.grid.resolution[i] = static_cast<int>(std::llround(res[i]));

  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Artifact writers.
// ---------------------------------------------------------------------------

std::string plant_label_at(const orchestrator::EpisodeConfig& cfg, double t) {
  return cfg.schedule.active(cfg.plant, t).label;
}

void write_trajectory(const fs::path& out, const orchestrator::EpisodeConfig& cfg,
                      const Trajectory& traj) {
  const Eigen::Index n = cfg.plant.state_dim();
  const Eigen::Index m = cfg.plant.input_dim();
  std::vector<std::string> header = {"t"};
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("x" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < m; ++i) header.push_back("u" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("r" + std::to_string(i + 1));
  header.push_back("plant_label");
  io::CsvWriter csv((out / "trajectory.csv").string(), header);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.time_of(i);
    std::vector<std::string> cells = {io::format_number(t)};
    for (Eigen::Index k = 0; k < n; ++k) cells.push_back(io::format_number(traj.states[i][k]));
    for (Eigen::Index k = 0; k < m; ++k) cells.push_back(io::format_number(traj.inputs[i][k]));
    const Eigen::VectorXd r = cfg.stack.setpoint_at(t);
    for (Eigen::Index k = 0; k < n; ++k) cells.push_back(io::format_number(r[k]));
    cells.push_back(plant_label_at(cfg, t));
    csv.raw_row(cells);
  }
}

void write_robustness(const fs::path& out, const orchestrator::EpisodeConfig& cfg,
                      const Trajectory& traj) {
  io::CsvWriter csv((out / "robustness.csv").string(), {"t", "xi_a", "liveness", "min_safety"});
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Eigen::VectorXd rho = stl::robustness_vector(cfg.stack, traj.states[i], traj.time_of(i));
    const double xi = stl::smooth_conjunction(rho);
    double min_safety = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k + 1 < rho.size(); ++k) min_safety = std::min(min_safety, rho[k]);
    if (!std::isfinite(min_safety)) min_safety = rho[rho.size() - 1];
    csv.row({traj.time_of(i), xi, rho[rho.size() - 1], min_safety});
  }
}

void write_monitor(const fs::path& out, const std::vector<orchestrator::MonitorRow>& rows) {
  io::CsvWriter csv((out / "monitor.csv").string(),
                    {"t", "xi_a", "r_m", "R_interval", "fitness_pred_mean", "fitness_pred_var",
                     "surprise", "integral_sp", "min_kl", "decision"});
  for (const auto& r : rows)
    csv.row({r.t, r.xi, r.r_m, r.reward, r.pred_mean, r.pred_var, r.surprise, r.integral,
             r.min_kl, static_cast<double>(r.decision)});
}

void write_sbo_history(const fs::path& out,
                       const std::vector<orchestrator::AdaptationEvent>& events) {
  std::vector<std::string> header = {"event", "k"};
  const Eigen::Index p = events.empty() ? 0 : events.front().theta_old.size();
  for (Eigen::Index i = 0; i < p; ++i) header.push_back("theta" + std::to_string(i + 1));
  if (p == 0) header.push_back("theta1");
  header.insert(header.end(), {"score", "lower", "upper", "set_membership"});
  io::CsvWriter csv((out / "sbo_history.csv").string(), header);
  for (std::size_t e = 0; e < events.size(); ++e) {
    for (const auto& row : events[e].sbo.history) {
      std::vector<std::string> cells = {io::format_number(static_cast<double>(e)),
                                        io::format_number(static_cast<double>(row.k))};
      for (Eigen::Index i = 0; i < row.theta.size(); ++i)
        cells.push_back(io::format_number(row.theta[i]));
      cells.push_back(io::format_number(row.score));
      cells.push_back(io::format_number(row.lower));
      cells.push_back(io::format_number(row.upper));
      cells.push_back(row.set_membership);
      csv.raw_row(cells);
    }
  }
}

void write_adaptations(const fs::path& out,
                       const std::vector<orchestrator::AdaptationEvent>& events) {
  const Eigen::Index p = events.empty() ? 1 : events.front().theta_old.size();
  std::vector<std::string> header = {"t"};
  for (Eigen::Index i = 0; i < p; ++i) header.push_back("theta_old" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < p; ++i) header.push_back("theta_new" + std::to_string(i + 1));
  io::CsvWriter csv((out / "adaptations.csv").string(), header);
  for (const auto& ev : events) {
    std::vector<double> cells = {ev.t};
    for (Eigen::Index i = 0; i < p; ++i) cells.push_back(ev.theta_old[i]);
    for (Eigen::Index i = 0; i < p; ++i) cells.push_back(ev.theta_new[i]);
    csv.row(cells);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << text;
}

void write_manifest(const fs::path& out, const std::string& command, std::uint64_t seed,
                    const std::vector<std::string>& files) {
  std::ostringstream os;
  os << "artifact = metacog\n";
  os << "version = 1.0.0\n";
  os << "command = " << command << "\n";
  os << "seed = " << seed << "\n";
  for (const auto& f : files) os << "file = " << f << "\n";
  write_text(out / "manifest.txt", os.str());
}

void write_plotscript(const fs::path& out) {
  write_text(out / "plot.py",
             "#!/usr/bin/env python3\n"
             "\"\"\"Plot every CSV in this directory against its first column.\"\"\"\n"
             "import csv\n"
             "import pathlib\n"
             "import matplotlib.pyplot as plt\n"
             "\n"
             "for path in sorted(pathlib.Path(__file__).parent.glob('*.csv')):\n"
             "    with open(path, newline='') as fh:\n"
             "        rows = list(csv.reader(fh))\n"
             "    header, data = rows[0], rows[1:]\n"
             "    numeric = []\n"
             "    for col in range(len(header)):\n"
             "        try:\n"
             "            numeric.append([float(r[col]) for r in data])\n"
             "        except ValueError:\n"
             "            numeric.append(None)\n"
             "    if numeric[0] is None or not data:\n"
             "        continue\n"
             "    fig, ax = plt.subplots()\n"
             "    for col in range(1, len(header)):\n"
             "        if numeric[col] is not None:\n"
             "            ax.plot(numeric[0], numeric[col], label=header[col])\n"
             "    ax.set_xlabel(header[0])\n"
             "    ax.set_title(path.stem)\n"
             "    ax.legend(fontsize='small')\n"
             "    fig.savefig(path.with_suffix('.png'), dpi=120)\n"
             "    plt.close(fig)\n");
}

fs::path prepare_out_dir(const std::string& out_opt, const io::ConfigDoc& doc) {
  std::string dir = out_opt;
  if (dir.empty()) dir = doc.get_string("output", "dir", "out");
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& out_opt,
                 std::optional<long> seed, bool plotscript) {
  const io::ConfigDoc doc = io::ConfigDoc::parse_file(config_path);
  orchestrator::EpisodeConfig cfg = episode_from(doc, seed);
  cfg.monitor_enabled = false;
  cfg.adaptation_enabled = false;
  const fs::path out = prepare_out_dir(out_opt, doc);

  log_info("simulate: horizon " + std::to_string(cfg.horizon) + " s, seed " +
           std::to_string(cfg.seed));
  const orchestrator::EpisodeReport report = orchestrator::run_episode(cfg);

  write_trajectory(out, cfg, report.trajectory);
  write_robustness(out, cfg, report.trajectory);
  write_text(out / "config_echo.txt", doc.echo());
  write_manifest(out, "simulate", cfg.seed,
                 {"trajectory.csv", "robustness.csv", "config_echo.txt"});
  if (plotscript) write_plotscript(out);
  std::cout << "simulate: wrote " << report.trajectory.size() << " samples to " << out.string()
            << "\n";
  return 0;
}

int cmd_end2end(const std::string& config_path, const std::string& out_opt,
                std::optional<long> seed, bool plotscript) {
  const io::ConfigDoc doc = io::ConfigDoc::parse_file(config_path);
  const orchestrator::EpisodeConfig cfg = episode_from(doc, seed);
  const fs::path out = prepare_out_dir(out_opt, doc);

  if (cfg.sbo.budget == 0)
    std::cerr << "warning: sbo.budget = 0 -- adaptation will keep the seed hyperparameters\n";

  log_info("end2end: horizon " + std::to_string(cfg.horizon) + " s, seed " +
           std::to_string(cfg.seed));
  const orchestrator::EpisodeReport report = orchestrator::run_episode(cfg);

  write_trajectory(out, cfg, report.trajectory);
  write_robustness(out, cfg, report.trajectory);
  write_monitor(out, report.monitor_trace);
  write_sbo_history(out, report.adaptations);
  write_adaptations(out, report.adaptations);
  write_text(out / "config_echo.txt", doc.echo());
  write_manifest(out, "end2end", cfg.seed,
                 {"trajectory.csv", "robustness.csv", "monitor.csv", "sbo_history.csv",
                  "adaptations.csv", "config_echo.txt"});
  if (plotscript) write_plotscript(out);
  std::cout << "end2end: " << report.adaptations.size() << " adaptation(s), "
            << report.monitor_trace.size() << " monitor samples, wrote " << out.string() << "\n";
  return 0;
}

int cmd_learn_fitness(const std::string& config_path, const std::string& out_opt,
                      std::optional<long> seed, bool plotscript) {
  const io::ConfigDoc doc = io::ConfigDoc::parse_file(config_path);
  orchestrator::EpisodeConfig cfg = episode_from(doc, seed);
  cfg.monitor_enabled = false;
  cfg.adaptation_enabled = false;
  const fs::path out = prepare_out_dir(out_opt, doc);

  // Base library straight from the specification (plant-independent).
  const gp::BaseGpLibrary lib = orchestrator::build_base_library(cfg.stack, cfg);
  std::vector<std::string> files;
  for (std::size_t i = 0; i < lib.entries.size(); ++i) {
    const std::string name = "base_gp_" + std::to_string(i) + ".txt";
    std::ofstream os(out / name, std::ios::binary);
    gp::serialize(lib.entries[i], os);
    files.push_back(name);
  }

  // Fitness GP from a nominal healthy rollout under the learned policy.
  const orchestrator::EpisodeReport report = orchestrator::run_episode(cfg);
  {
    std::ofstream os(out / "fitness_gp.txt", std::ios::binary);
    gp::serialize(report.fitness_gp, os);
    files.push_back("fitness_gp.txt");
  }
  write_robustness(out, cfg, report.trajectory);
  files.push_back("robustness.csv");
  write_text(out / "config_echo.txt", doc.echo());
  files.push_back("config_echo.txt");
  write_manifest(out, "learn-fitness", cfg.seed, files);
  if (plotscript) write_plotscript(out);
  std::cout << "learn-fitness: " << lib.entries.size()
            << " base GP entries + nominal fitness GP written to " << out.string() << "\n";
  return 0;
}

// --- oracle comparisons ----------------------------------------------------

int oracle_riccati() {
  // Scalar benchmark: x' = x + u, gamma = 0.2, Q = R = 1. Closed form of
  // the shifted problem: P = a_s + sqrt(a_s^2 + 1) with a_s = 1 - gamma/2.
  const double a_s = 1.0 - 0.1;
  const double P_true = a_s + std::sqrt(a_s * a_s + 1.0);
  const auto sol = rl::riccati_oracle(Eigen::MatrixXd::Constant(1, 1, 1.0),
                                      Eigen::MatrixXd::Identity(1, 1),
                                      Eigen::MatrixXd::Identity(1, 1),
                                      Eigen::MatrixXd::Identity(1, 1), 0.2);
  const double gain_err = std::abs(sol.K(0, 0) - P_true) / P_true;
  std::cout << "oracle riccati: scalar benchmark max relative gain error = "
            << io::format_number(gain_err) << " (tolerance 1e-3)\n";
  if (gain_err >= 1e-3) {
    std::cout << "  FAIL: K = " << io::format_number(sol.K(0, 0)) << ", closed form "
              << io::format_number(P_true) << "\n";
    return 1;
  }
  return 0;
}

int oracle_robustness() {
  std::mt19937_64 rng(2024);
  const std::vector<std::string> schema = {"x1", "x2", "x3"};
  double max_err = 0.0;
  int cases = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto rf = oracles::random_formula(rng, schema, 4, 2.0);
    const Trajectory traj = oracles::random_signal(rng, 3, 50, 0.1);
    for (std::size_t i = 0; i < traj.size(); i += 7) {
      const double t = traj.time_of(i);
      double got = 0.0, want = 0.0;
      bool got_empty = false, want_empty = false;
      try {
        got = stl::robustness(*rf.formula, traj, t);
      } catch (const EmptyWindowError&) {
        got_empty = true;
      }
      try {
        want = oracles::brute_force_robustness(*rf.formula, traj, t);
      } catch (const EmptyWindowError&) {
        want_empty = true;
      }
      if (got_empty != want_empty) {
        std::cout << "oracle robustness: FAIL empty-window disagreement\n  formula " << rf.text
                  << "\n  t = " << io::format_number(t) << "\n";
        return 1;
      }
      if (!got_empty) {
        max_err = std::max(max_err, std::abs(got - want));
        ++cases;
      }
    }
  }
  std::cout << "oracle robustness: " << cases
            << " comparisons, max abs error = " << io::format_number(max_err)
            << " (tolerance 0)\n";
  return max_err == 0.0 ? 0 : 1;
}

int oracle_gp() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const gp::Kernel kernel =
      gp::Kernel::squared_exponential(Eigen::VectorXd::Constant(2, 0.8), 1.3);
  Eigen::MatrixXd X(50, 2);
  Eigen::VectorXd y(50);
  for (Eigen::Index i = 0; i < 50; ++i) {
    X(i, 0) = gauss(rng);
    X(i, 1) = gauss(rng);
    y[i] = std::sin(1.7 * X(i, 0)) + 0.4 * X(i, 1) + 0.01 * gauss(rng);
  }
  const auto fitted = gp::fit_direct(kernel, X, y, 1e-4);
  const Eigen::MatrixXd K = kernel.gram(X);
  double max_err = 0.0;
  for (int q = 0; q < 40; ++q) {
    Eigen::VectorXd query(2);
    query << gauss(rng), gauss(rng);
    const auto got = gp::gp_predict(fitted, query);
    double mean = 0.0, var = 0.0;
    oracles::dense_gp_posterior(K, kernel.covariance_vector(X, query), kernel(query, query), y,
                                1e-4, 0.0, &mean, &var);
    max_err = std::max({max_err, std::abs(got.mean - mean), std::abs(got.variance - var)});
  }
  std::cout << "oracle gp: 50-point dense problem, max posterior error = "
            << io::format_number(max_err) << " (tolerance 1e-8)\n";
  return max_err < 1e-8 ? 0 : 1;
}

int cmd_oracle(const std::string& subject) {
  if (subject == "riccati") return oracle_riccati();
  if (subject == "robustness") return oracle_robustness();
  if (subject == "gp") return oracle_gp();
  if (subject == "all") {
    int rc = 0;
    rc |= oracle_riccati();
    rc |= oracle_robustness();
    rc |= oracle_gp();
    return rc;
  }
  throw ConfigError("unknown oracle subject '" + subject +
                    "' (expected riccati, robustness, gp or all)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metacognitive control artifact"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<long> seed;
  bool plotscript = false;
  std::string oracle_subject = "all";

  auto add_common = [&](CLI::App* sub, bool with_outputs) {
    sub->add_option("config", config_path, "run configuration file")->required();
    if (with_outputs) {
      sub->add_option("--out", out_dir, "output directory (default from [output] dir)");
      sub->add_option("--seed", seed, "override scenario.seed");
      sub->add_flag("--emit-plotscript", plotscript, "write a generic plotting script");
    }
  };

  CLI::App* sim = app.add_subcommand("simulate", "closed-loop run with fixed hyperparameters");
  add_common(sim, true);
  CLI::App* e2e = app.add_subcommand("end2end", "full monitored episode with adaptation");
  add_common(e2e, true);
  CLI::App* learn =
      app.add_subcommand("learn-fitness", "fit and export the base and nominal fitness GPs");
  add_common(learn, true);
  CLI::App* oracle = app.add_subcommand("oracle", "independent oracle comparisons");
  oracle->add_option("subject", oracle_subject,
                     "riccati, robustness, gp or all (default all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_dir, seed, plotscript);
    if (e2e->parsed()) return cmd_end2end(config_path, out_dir, seed, plotscript);
    if (learn->parsed()) return cmd_learn_fitness(config_path, out_dir, seed, plotscript);
    if (oracle->parsed()) return cmd_oracle(oracle_subject);
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
