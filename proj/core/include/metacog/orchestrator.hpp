#pragma once

#include <cstdint>
#include <vector>

#include "metacog/gp/posterior.hpp"
#include "metacog/hyperparams.hpp"
#include "metacog/monitor/fitness.hpp"
#include "metacog/rl/policy_iteration.hpp"
#include "metacog/sbo/safe_opt.hpp"
#include "metacog/sim/simulate.hpp"
#include "metacog/stl/robustness.hpp"
#include "metacog/trajectory.hpp"

namespace metacog::orchestrator {

struct RlSettings {
  double gamma = 0.1;          // RL discount rate
  int N = 120;                 // exploration intervals
  double T_int = 0.1;          // interval length, s
  double eps = 1e-6;           // policy-iteration stop threshold
  int max_iter = 100;
  double noise_amp = 0.1;      // exploration amplitude, input units
  double adapt_noise_amp = 0.05;  // reduced amplitude for mid-episode logs
};

struct EpisodeConfig {
  sim::LtiPlant plant;
  sim::ScenarioSchedule schedule;
  HyperParams theta0;
  stl::PredicateStack stack;       // setpoint kept in sync with theta
  monitor::FitnessConfig fitness;
  sbo::DomainGrid grid;            // over flattened hyperparameters
  sbo::SboConfig sbo;
  RlSettings rl;

  double horizon = 12.0;
  double dt = 1e-3;
  double rho_min = 0.05;           // minimum acceptable robustness margin
  double rearm_delay = -1.0;       // refractory after adaptation; <0 means the settling time
  bool monitor_enabled = true;
  bool adaptation_enabled = true;
  std::uint64_t seed = 1;
  Eigen::VectorXd x0;              // empty means zero state

  Eigen::VectorXd ls_x;            // fitness-kernel state lengthscales (empty: default)
  Eigen::VectorXd ls_theta;        // fitness-kernel hyperparameter lengthscales
  // Observation noise for fitness GPs. Deliberately not too small: the online
  // fits see many near-coincident samples once the loop settles, and an
  // overconfident posterior inflates the divergence of healthy behavior from
  // the base library past the adaptation threshold.
  double fitness_noise = 1e-2;
  int base_points = 12;            // inducing points per base GP entry
  double eval_horizon = 6.0;       // candidate rollout length during SBO

  void validate() const;
  // Default refractory matches the settling period granted at episode start:
  // judging a freshly redeployed loop before it has settled re-triggers on its
  // own recovery transient.
  double effective_rearm() const { return rearm_delay < 0.0 ? fitness.t_s : rearm_delay; }
};

struct MonitorRow {
  double t = 0.0;
  double xi = 0.0;        // smooth robustness at the sample
  double r_m = 0.0;       // instantaneous meta-reward at the sample
  double reward = 0.0;    // integrated reward of the ending TD interval
  double pred_mean = 0.0;  // fitness-GP prediction at the sample
  double pred_var = 0.0;
  double surprise = 0.0;
  double integral = 0.0;  // |SP| integral over the retained window
  double min_kl = 0.0;    // NaN when the KL test was not reached
  int decision = 0;       // 0 none, 1 infer-only, 2 adapt
};

struct AdaptationEvent {
  double t = 0.0;
  Eigen::VectorXd theta_old;
  Eigen::VectorXd theta_new;
  sbo::SboResult sbo;
};

struct EpisodeReport {
  Trajectory trajectory;
  std::vector<MonitorRow> monitor_trace;
  std::vector<AdaptationEvent> adaptations;
  rl::PolicyWeights final_policy;
  HyperParams final_theta;
  gp::GpPosterior fitness_gp;
  gp::BaseGpLibrary bases;
};

/// Joint-input kernel of the fitness GPs: SE over the state block times SE
/// over the hyperparameter block, lengthscales from config (defaults:
/// unit state scales; twice the grid span per hyperparameter coordinate).
gp::Kernel fitness_kernel(const EpisodeConfig& cfg);

/// Fit one GP per robustness margin {rho_min, 2 rho_min, 4 rho_min} to
/// synthetic template states holding that margin, with the constant
/// per-interval meta-reward the margin implies. Plant-independent.
gp::BaseGpLibrary build_base_library(const stl::PredicateStack& stack, const EpisodeConfig& cfg);

/// Full two-layer episode: learn and deploy the low-level policy for
/// theta0, monitor the fitness each TD interval, and on an Adapt trigger
/// run safe Bayesian optimization over the hyperparameter grid with
/// off-policy candidate evaluation on a frozen log, then redeploy.
EpisodeReport run_episode(const EpisodeConfig& cfg);

}  // namespace metacog::orchestrator
