#include "metacog/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "metacog/rl/riccati.hpp"

namespace metacog::orchestrator {

void EpisodeConfig::validate() const {
  plant.validate();
  schedule.validate();
  theta0.validate();
  stack.validate();
  fitness.validate();
  const Eigen::Index n = plant.state_dim();
  const Eigen::Index m = plant.input_dim();
  if (theta0.q_diag.size() != n || theta0.setpoint.size() != n || theta0.r_diag.size() != m)
    throw ConfigError("episode: theta0 blocks must match plant dimensions");
  if (stack.setpoint.size() != n) throw ConfigError("episode: stack setpoint must match state dim");
  if (grid.lo.size() != theta0.flat_size())
    throw ConfigError("episode: SBO grid dimension must equal the flattened hyperparameters");
  if (horizon <= 0.0 || dt <= 0.0) throw ConfigError("episode: horizon and dt must be positive");
  if (rho_min <= 0.0) throw ConfigError("episode: rho_min must be positive");
  if (rl.N < 1 || rl.T_int <= 0.0 || rl.gamma < 0.0)
    throw ConfigError("episode: invalid RL settings");
  if (base_points < 3) throw ConfigError("episode: base_points must be at least 3");
  if (eval_horizon <= fitness.t_s)
    throw ConfigError("episode: eval_horizon must exceed the settling time");
  if (x0.size() != 0 && x0.size() != n) throw ConfigError("episode: x0 dimension mismatch");
}

gp::Kernel fitness_kernel(const EpisodeConfig& cfg) {
  const Eigen::Index n = cfg.plant.state_dim();
  const Eigen::Index p = cfg.theta0.flat_size();
  Eigen::VectorXd lx = cfg.ls_x;
  if (lx.size() == 0) lx = Eigen::VectorXd::Ones(n);
  if (lx.size() != n) throw ConfigError("fitness_kernel: ls_x dimension mismatch");
  Eigen::VectorXd lt = cfg.ls_theta;
  if (lt.size() == 0) {
    lt.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      // Wide default: the hyperparameter coordinates locate a fitness profile
      // in the joint input space, but predictions must not shrink toward the
      // prior merely because a candidate sits far from the incumbent on the
      // grid — that would bias every cross-candidate divergence.
      const double span = cfg.grid.hi[i] - cfg.grid.lo[i];
      lt[i] = span > 0.0 ? 20.0 * span : 1.0;
    }
  }
  if (lt.size() != p) throw ConfigError("fitness_kernel: ls_theta dimension mismatch");
  return gp::Kernel::product(gp::Kernel::squared_exponential(lx, 1.0, 0),
                             gp::Kernel::squared_exponential(lt, 1.0, static_cast<int>(n)));
}

namespace {

double smooth_margin(const stl::PredicateStack& stack, const Eigen::VectorXd& x) {
  return stl::smooth_conjunction(stl::robustness_vector(stack, x));
}

// States x = setpoint + s*v with smooth_margin(x) equal to the target, by
// bisection along seeded random directions.
std::vector<Eigen::VectorXd> template_states(const stl::PredicateStack& stack, double target,
                                             int count, std::uint64_t seed) {
  const Eigen::Index n = stack.setpoint.size();
  const double at_setpoint = smooth_margin(stack, stack.setpoint);
  if (at_setpoint <= target)
    throw ConfigError("build_base_library: margin " + std::to_string(target) +
                      " is unreachable (smooth robustness at the setpoint is " +
                      std::to_string(at_setpoint) + "); lower rho_min or widen the envelope");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(count));
  // In low dimensions distinct directions run out quickly (a 1-D envelope
  // has exactly two); cap the attempts and keep whatever distinct states
  // were found so the inducing Gram stays full rank.
  for (int attempt = 0; attempt < 64 * count && static_cast<int>(out.size()) < count; ++attempt) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
    if (v.norm() < 1e-12) continue;
    v.normalize();
    // bracket: margin falls below target before s exceeds the envelope
    double lo = 0.0, hi = stack.eps;
    while (smooth_margin(stack, stack.setpoint + hi * v) > target && hi < 1e6) hi *= 2.0;
    if (smooth_margin(stack, stack.setpoint + hi * v) > target) continue;  // degenerate direction
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (smooth_margin(stack, stack.setpoint + mid * v) > target)
        lo = mid;
      else
        hi = mid;
    }
    const Eigen::VectorXd x = stack.setpoint + 0.5 * (lo + hi) * v;
    bool duplicate = false;
    for (const auto& seen : out)
      if ((seen - x).norm() < 1e-6 * (1.0 + x.norm())) {
        duplicate = true;
        break;
      }
    if (!duplicate) out.push_back(x);
  }
  if (out.size() < 2)
    throw ConfigError("build_base_library: fewer than 2 distinct template states at margin " +
                      std::to_string(target));
  return out;
}

sim::Policy make_policy(const rl::PolicyWeights& w, const HyperParams& theta) {
  const Eigen::VectorXd r = theta.setpoint;
  const Eigen::MatrixXd wb = w.w_bar;
  return [r, wb](double, const Eigen::VectorXd& x) {
    Eigen::VectorXd X(2 * r.size());
    X << x - r, r;
    return (wb.transpose() * X).eval();
  };
}

// Deployment policy: tracks the reference active at each instant, so a
// scheduled setpoint switch (commanded maneuver) takes effect mid-run.
sim::Policy make_scheduled_policy(const rl::PolicyWeights& w, const stl::PredicateStack& stack) {
  const Eigen::MatrixXd wb = w.w_bar;
  const stl::PredicateStack s = stack;
  return [s, wb](double t, const Eigen::VectorXd& x) {
    const Eigen::VectorXd r = s.setpoint_at(t);
    Eigen::VectorXd X(2 * r.size());
    X << x - r, r;
    return (wb.transpose() * X).eval();
  };
}

stl::PredicateStack stack_for(const stl::PredicateStack& base, const HyperParams& theta) {
  stl::PredicateStack s = base;
  s.setpoint = theta.setpoint;
  return s;
}

// Fitness GP from the post-settling suffix of a closed-loop trajectory.
gp::GpPosterior fit_fitness_gp(const Trajectory& traj, const stl::PredicateStack& stack,
                               const monitor::FitnessConfig& fit, const gp::Kernel& kernel,
                               const Eigen::VectorXd& theta_flat, double noise, double from_t) {
  const std::size_t first = traj.index_at_or_after(from_t);
  Trajectory suffix;
  suffix.t0 = traj.time_of(first);
  suffix.dt = traj.dt;
  suffix.states.assign(traj.states.begin() + static_cast<long>(first), traj.states.end());
  if (!traj.inputs.empty())
    suffix.inputs.assign(traj.inputs.begin() + static_cast<long>(first), traj.inputs.end());
  const auto stride = static_cast<std::size_t>(std::llround(fit.T / traj.dt));
  const std::size_t L = (suffix.size() - 1) / stride + 1;
  if (L < 3) throw EmptyWindowError("fit_fitness_gp: fewer than 3 TD samples in the window");
  Eigen::VectorXd rewards(static_cast<Eigen::Index>(L) - 1);
  for (std::size_t i = 1; i < L; ++i)
    rewards[static_cast<Eigen::Index>(i) - 1] = monitor::integrated_reward(suffix, stack, fit, i);
  // The GP is indexed by tracking error, not absolute state: fitness is
  // invariant to the active reference, so a commanded setpoint switch does
  // not create contradictory observations at nearby states.
  for (std::size_t i = 0; i < suffix.size(); ++i)
    suffix.states[i] -= stack.setpoint_at(suffix.time_of(i));
  return gp::gptd_fit(suffix, theta_flat, rewards, kernel, noise, fit.a, fit.T, fit.td_mode);
}

}  // namespace

gp::BaseGpLibrary build_base_library(const stl::PredicateStack& stack, const EpisodeConfig& cfg) {
  stack.validate();
  const gp::Kernel kernel = fitness_kernel(cfg);
  const Eigen::VectorXd theta_flat = cfg.theta0.flatten();
  const Eigen::Index n = stack.setpoint.size();
  gp::BaseGpLibrary lib;
  const double margins[3] = {cfg.rho_min, 2.0 * cfg.rho_min, 4.0 * cfg.rho_min};
  for (int mi = 0; mi < 3; ++mi) {
    // Fixed seed: the library depends only on the spec, not the episode.
    const auto states = template_states(stack, margins[mi], cfg.base_points,
                                        0x6d617267696eULL + static_cast<std::uint64_t>(mi));
    Eigen::MatrixXd inducing(static_cast<Eigen::Index>(states.size()), n + theta_flat.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
      // Error coordinates, matching the joint inputs of the online fits.
      inducing.row(static_cast<Eigen::Index>(i)).head(n) = states[i] - stack.setpoint;
      inducing.row(static_cast<Eigen::Index>(i)).tail(theta_flat.size()) = theta_flat;
    }
    // A trajectory pinned at the margin yields the constant meta-reward
    // r_m (1 - e^{-aT}) / a per TD interval, whose discounted fixed point
    // is the stationary fitness r_m / a. Fit that value directly: a TD fit
    // over a handful of template states cannot identify the constant mode.
    const double rm = monitor::meta_reward(margins[mi], cfg.fitness);
    const double stationary = rm / cfg.fitness.a;
    const Eigen::VectorXd values = Eigen::VectorXd::Constant(inducing.rows(), stationary);
    lib.entries.push_back(gp::fit_direct(kernel, inducing, values, cfg.fitness_noise));
  }
  // Nominal-behavior entry: a healthy loop settles at the margin attained at
  // the setpoint itself, which generally falls between the coarse degradation
  // levels above. Without this entry every healthy fitness profile carries a
  // spurious divergence from the library and no candidate can ever look safe.
  {
    const double xi_star =
        stl::smooth_conjunction(stl::robustness_vector(stack, stack.setpoint));
    // A settled trajectory's GP predicts the setpoint's stationary fitness
    // (kernel-smoothed, flat) in a neighborhood of the setpoint, so the entry
    // carries that constant value; the inducing set is spread over nearby
    // margins only to keep its Gram well conditioned.
    // Greedy thinning: near the setpoint the templates cluster far inside the
    // kernel lengthscale, and near-duplicate inducing points make the entry's
    // Gram numerically singular (shift_inducing rejects it outright). Low
    // dimensions (few distinct directions) may need deeper margins before two
    // separable points exist.
    const double fractions[8] = {0.97, 0.9, 0.8, 0.6, 0.45, 0.3, 0.2, 0.1};
    const int per = std::max(2, cfg.base_points / 3);
    std::vector<Eigen::VectorXd> rows;
    for (int fi = 0; fi < 8; ++fi) {
      if (fi >= 3 && rows.size() >= 2) break;
      const auto group = template_states(stack, fractions[fi] * xi_star, per,
                                         0x736574746c65ULL + static_cast<std::uint64_t>(fi));
      for (const auto& s : group) {
        Eigen::VectorXd row(n + theta_flat.size());
        row.head(n) = s - stack.setpoint;
        row.tail(theta_flat.size()) = theta_flat;
        bool close = false;
        for (const auto& seen : rows) {
          const double k01 = kernel(row, seen);
          const double k00 = std::sqrt(kernel(row, row) * kernel(seen, seen));
          if (k01 > 0.995 * k00) {
            close = true;
            break;
          }
        }
        if (!close) rows.push_back(std::move(row));
      }
    }
    const double stationary = monitor::meta_reward(xi_star, cfg.fitness) / cfg.fitness.a;
    if (rows.size() < 2)
      throw ConfigError("build_base_library: fewer than 2 separable template states near the setpoint");
    Eigen::MatrixXd inducing(static_cast<Eigen::Index>(rows.size()), n + theta_flat.size());
    for (std::size_t i = 0; i < rows.size(); ++i) inducing.row(static_cast<Eigen::Index>(i)) = rows[i];
    const Eigen::VectorXd vals = Eigen::VectorXd::Constant(inducing.rows(), stationary);
    lib.entries.push_back(gp::fit_direct(kernel, inducing, vals, cfg.fitness_noise));
  }
  return lib;
}

namespace {

struct Deployment {
  HyperParams theta;
  rl::PolicyWeights weights;
  sim::Policy policy;
};

struct SboEvalContext {
  const rl::DataLog* log = nullptr;
  const sim::LtiPlant* plant = nullptr;
  const EpisodeConfig* cfg = nullptr;
  const gp::Kernel* kernel = nullptr;
  const gp::BaseGpLibrary* bases = nullptr;
  Eigen::VectorXd x_start;
  Eigen::VectorXd theta_ref;
  Eigen::MatrixXd w_bar_init;  // stabilizing start for policy iteration
  double p_min = 0.0;          // effective safety threshold
  mutable std::map<std::vector<double>, double> cache;
  // keep the artifacts of the best-scoring evaluation for redeployment
  mutable double best_score = -std::numeric_limits<double>::infinity();
  mutable Eigen::VectorXd best_theta;
  mutable rl::PolicyWeights best_weights;
  mutable gp::GpPosterior best_gp;

  double operator()(const Eigen::VectorXd& theta_flat) const;
};

double SboEvalContext::operator()(const Eigen::VectorXd& theta_flat) const {
  std::vector<double> key(theta_flat.data(), theta_flat.data() + theta_flat.size());
  if (const auto it = cache.find(key); it != cache.end()) return it->second;
  const double unsafe = p_min - 10.0;
  double score = unsafe;
  const Eigen::Index n = plant->state_dim();
  const Eigen::Index m = plant->input_dim();
  const HyperParams theta = HyperParams::unflatten(theta_flat, n, m, n, theta_flat.size() - 2 * n - m);
  // Candidate rollouts run on their own local clock, so they track the
  // commanded reference throughout (no scheduled switch).
  stl::PredicateStack ev_stack = stack_for(cfg->stack, theta);
  ev_stack.setpoint_time.reset();
  ev_stack.setpoint_before.resize(0);
  // Try the deployed gain as the stabilizing start first; it can be
  // destabilizing on the changed plant, in which case the open-loop (zero)
  // start is the remaining option.
  const Eigen::MatrixXd zero_start;
  for (const Eigen::MatrixXd* start : {&w_bar_init, &zero_start}) {
    try {
      theta.validate();
      const rl::SolveReport solved =
          rl::solve_policy(*log, theta, cfg->rl.eps, cfg->rl.max_iter, *start);
      sim::SimulateConfig sc;
      sc.t0 = 0.0;
      sc.horizon = cfg->eval_horizon;
      sc.dt = cfg->dt;
      const Trajectory rollout =
          sim::simulate(*plant, make_policy(solved.weights, theta), sc, x_start);
      const gp::GpPosterior candidate_gp =
          fit_fitness_gp(rollout, ev_stack, cfg->fitness, *kernel, theta_flat,
                         cfg->fitness_noise, cfg->fitness.t_s);
      score = sbo::survival_score(theta_flat, candidate_gp, *bases, theta_ref, cfg->fitness.varpi,
                                  p_min);
      if (score > best_score) {
        best_score = score;
        best_theta = theta_flat;
        best_weights = solved.weights;
        best_gp = candidate_gp;
      }
      break;
    } catch (const Error&) {
      score = unsafe;  // non-solvable / blown-up candidates are unsafe by fiat
    }
    if (w_bar_init.size() == 0) break;  // both starts identical
  }
  cache[key] = score;
  return score;
}

}  // namespace

EpisodeReport run_episode(const EpisodeConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = cfg.plant.state_dim();
  const Eigen::Index m = cfg.plant.input_dim();
  const Eigen::VectorXd x0 = cfg.x0.size() ? cfg.x0 : Eigen::VectorXd::Zero(n);
  const gp::Kernel kernel = fitness_kernel(cfg);

  // Survival scores are strictly negative, so a threshold left at the
  // generic default of zero would reject every candidate. The score of a
  // healthy candidate is bounded below by -(grid diameter) minus the KL
  // barrier at the adaptation threshold; default just under that, so safety
  // effectively means "fitness divergence below varpi" anywhere on the grid.
  sbo::SboConfig sbo_cfg = cfg.sbo;
  if (sbo_cfg.p_min >= 0.0)
    sbo_cfg.p_min = -(cfg.grid.hi - cfg.grid.lo).norm() -
                    std::log1p(1.0 / cfg.fitness.varpi) - 1.0;

  EpisodeReport report;

  // --- Stage 1: learn the low-level policy for theta0 on the nominal plant.
  rl::DataLog log0;
  {
    const auto noise =
        rl::make_exploration_noise(cfg.seed, m, n, cfg.rl.noise_amp);
    const rl::BehaviorPolicy idle = [m](double, const Eigen::VectorXd&) {
      return Eigen::VectorXd::Zero(m);
    };
    log0 = rl::collect_data(cfg.plant, idle, noise, cfg.theta0, cfg.rl.N, cfg.rl.T_int, cfg.dt,
                            Eigen::VectorXd::Zero(n));
    log0.gamma = cfg.rl.gamma;
  }
  Deployment dep;
  dep.theta = cfg.theta0;
  dep.weights = rl::solve_policy(log0, cfg.theta0, cfg.rl.eps, cfg.rl.max_iter).weights;

  // --- Stage 2: base library and the offline fitness GP (nominal rollout
  // under the deployed policy, so a healthy deployment shows no surprise).
  report.bases = build_base_library(stack_for(cfg.stack, cfg.theta0), cfg);
  stl::PredicateStack stack = stack_for(cfg.stack, dep.theta);
  dep.policy = make_scheduled_policy(dep.weights, stack);
  gp::GpPosterior fitness_gp;
  {
    sim::SimulateConfig sc;
    sc.t0 = 0.0;
    sc.horizon = cfg.horizon;
    sc.dt = cfg.dt;
    const Trajectory nominal = sim::simulate(cfg.plant, dep.policy, sc, x0);
    // Fit past any commanded reference switch: states before it carry the
    // maneuver in their future, so their fitness contradicts the post-settle
    // value at the same tracking error.
    double fit_from = cfg.fitness.t_s;
    if (stack.setpoint_time) fit_from = std::max(fit_from, *stack.setpoint_time);
    fitness_gp = fit_fitness_gp(nominal, stack, cfg.fitness, kernel, dep.theta.flatten(),
                                cfg.fitness_noise, fit_from);
  }

  // --- Stage 3: deploy and monitor.
  const auto steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  if (std::abs(static_cast<double>(steps) * cfg.dt - cfg.horizon) > 1e-9)
    throw ConfigError("episode: horizon must be an integer multiple of dt");
  const auto stride = static_cast<std::size_t>(std::llround(cfg.fitness.T / cfg.dt));
  if (stride == 0 || std::abs(static_cast<double>(stride) * cfg.dt - cfg.fitness.T) > 1e-9)
    throw ConfigError("episode: TD interval must be an integer multiple of dt");

  Trajectory& traj = report.trajectory;
  traj.t0 = 0.0;
  traj.dt = cfg.dt;
  traj.states.reserve(steps + 1);
  traj.inputs.reserve(steps + 1);

  monitor::SurpriseWindow window(cfg.fitness);
  double rearm_until = cfg.fitness.t_s;  // settle before monitoring
  int adapt_count = 0;

  Eigen::VectorXd x = x0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = traj.time_of(i);
    if (x.cwiseAbs().maxCoeff() > 1e6 || !x.allFinite())
      throw NumericError("episode: state blew up at t = " + std::to_string(t));
    traj.states.push_back(x);
    traj.inputs.push_back(dep.policy(t, x));

    const bool td_sample = cfg.monitor_enabled && i > 0 && i % stride == 0;
    if (td_sample) {
      const std::size_t interval = i / stride;
      const double reward = monitor::integrated_reward(traj, stack, cfg.fitness, interval);
      const Eigen::VectorXd theta_flat = dep.theta.flatten();
      Eigen::VectorXd q_prev(n + theta_flat.size()), q_now(n + theta_flat.size());
      q_prev << traj.states[i - stride] - stack.setpoint_at(traj.time_of(i - stride)), theta_flat;
      q_now << x - stack.setpoint_at(t), theta_flat;
      const double sp = monitor::surprise(fitness_gp, q_prev, q_now, reward, cfg.fitness);
      // A TD interval containing a commanded reference switch is non-Markov
      // by construction; drop it and restart the window.
      const bool ref_switched =
          (stack.setpoint_at(t) - stack.setpoint_at(traj.time_of(i - stride))).norm() > 0.0;
      if (ref_switched)
        window = monitor::SurpriseWindow(cfg.fitness);
      else
        window.push(t, sp);

      MonitorRow row;
      row.t = t;
      row.xi = stl::smooth_conjunction(stl::robustness_vector(stack, x, t));
      row.r_m = monitor::meta_reward(row.xi, cfg.fitness);
      row.reward = reward;
      const auto pred = gp::gp_predict(fitness_gp, q_now);
      row.pred_mean = pred.mean;
      row.pred_var = pred.variance;
      row.surprise = sp;
      row.integral = window.filled() ? window.integral_abs() : 0.0;
      row.min_kl = std::numeric_limits<double>::quiet_NaN();

      if (window.filled() && t >= rearm_until) {
        // The trigger compares a freshly inferred GP (recent window) with
        // the base library, so the KL test sees post-change behaviour.
        monitor::Decision decision = monitor::Decision::NoAction;
        double min_kl = std::numeric_limits<double>::quiet_NaN();
        double integral = window.integral_abs();
        if (integral >= cfg.fitness.beta) {
          const double lookback = std::max(cfg.fitness.delta, 1.0);
          double from = std::max(0.0, t - lookback);
          // Never mix samples from before a commanded reference switch into
          // the recent refit.
          if (stack.setpoint_time && from < *stack.setpoint_time && t >= *stack.setpoint_time)
            from = *stack.setpoint_time;
          gp::GpPosterior recent =
              fit_fitness_gp(traj, stack, cfg.fitness, kernel, theta_flat, cfg.fitness_noise, from);
          decision = monitor::trigger(window, recent, report.bases, cfg.fitness, &min_kl, &integral);
          if (decision == monitor::Decision::InferOnly) {
            fitness_gp = recent;
          } else if (decision == monitor::Decision::Adapt && cfg.adaptation_enabled) {
            // Freeze a fresh log from the currently active plant, then
            // optimize the hyperparameters over the frozen log.
            const sim::LtiPlant& active = cfg.schedule.active(cfg.plant, t);
            rl::DataLog log;
            const auto noise = rl::make_exploration_noise(
                cfg.seed + 1000 + static_cast<std::uint64_t>(adapt_count), m, n,
                cfg.rl.noise_amp);
            // Prefer open-loop excitation (as in the initial learning stage):
            // a feedback-dominated log confines the data to the closed-loop
            // manifold and leaves the regressors rank deficient. Fall back to
            // the deployed gain with reduced exploration when the open loop
            // diverges.
            try {
              log = rl::collect_data(active, [m](double, const Eigen::VectorXd&) {
                                       return Eigen::VectorXd::Zero(m);
                                     },
                                     noise, dep.theta, cfg.rl.N, cfg.rl.T_int, cfg.dt, x);
            } catch (const NumericError&) {
              const auto noise2 = rl::make_exploration_noise(
                  cfg.seed + 2000 + static_cast<std::uint64_t>(adapt_count), m, n,
                  cfg.rl.adapt_noise_amp);
              const sim::Policy behavior = make_policy(dep.weights, dep.theta);
              log = rl::collect_data(active, [&behavior](double tt, const Eigen::VectorXd& xx) {
                                       return behavior(tt, xx);
                                     },
                                     noise2, dep.theta, cfg.rl.N, cfg.rl.T_int, cfg.dt, x);
            }
            log.gamma = cfg.rl.gamma;

            SboEvalContext eval;
            eval.log = &log;
            eval.plant = &active;
            eval.cfg = &cfg;
            eval.kernel = &kernel;
            eval.bases = &report.bases;
            eval.x_start = x;
            eval.theta_ref = theta_flat;
            // the deployed gain is the best stabilizing start available for
            // the changed dynamics
            eval.w_bar_init = dep.weights.w_bar;
            eval.p_min = sbo_cfg.p_min;

            sbo::SboResult result;
            if (sbo_cfg.budget <= 0) {
              // Degenerate budget: the adaptation is attempted but no search
              // is allowed, so the deployed hyperparameters stay in place.
              result.best = theta_flat;
              result.best_lower = eval(theta_flat);
              sbo::SboHistoryRow row;
              row.k = 0;
              row.theta = theta_flat;
              row.score = row.lower = row.upper = result.best_lower;
              row.set_membership = "seed";
              result.history.push_back(std::move(row));
            } else {
              // The deployed theta is no longer safe; scan the grid by
              // distance to it for a certified seed.
              const auto points = cfg.grid.enumerate();
              std::vector<std::size_t> order(points.size());
              std::iota(order.begin(), order.end(), std::size_t{0});
              std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return (points[a] - theta_flat).norm() < (points[b] - theta_flat).norm();
              });
              Eigen::VectorXd seed_theta;
              for (std::size_t idx : order) {
                if (eval(points[idx]) >= sbo_cfg.p_min) {
                  seed_theta = points[idx];
                  break;
                }
              }
              if (seed_theta.size() == 0)
                throw NumericError("episode: no safe hyperparameter seed on the grid at t = " +
                                   std::to_string(t));

              result = sbo::sbo_run(seed_theta, std::cref(eval), cfg.grid, sbo_cfg);
              eval(result.best);  // ensure the winner's artifacts are cached
            }

            AdaptationEvent event;
            event.t = t;
            event.theta_old = theta_flat;
            event.theta_new = result.best;
            event.sbo = result;
            report.adaptations.push_back(std::move(event));

            // Redeploy: policy for the winning theta, refreshed fitness GP.
            dep.theta = HyperParams::unflatten(result.best, n, m, n,
                                               result.best.size() - 2 * n - m);
            if (eval.best_theta.size() == result.best.size() &&
                (result.best - eval.best_theta).norm() < 1e-12) {
              dep.weights = eval.best_weights;
              fitness_gp = eval.best_gp;
            } else {
              try {
                dep.weights = rl::solve_policy(log, dep.theta, cfg.rl.eps, cfg.rl.max_iter,
                                               eval.w_bar_init)
                                  .weights;
              } catch (const Error&) {
                dep.weights =
                    rl::solve_policy(log, dep.theta, cfg.rl.eps, cfg.rl.max_iter).weights;
              }
            }
            stack = stack_for(cfg.stack, dep.theta);
            dep.policy = make_scheduled_policy(dep.weights, stack);
            window = monitor::SurpriseWindow(cfg.fitness);
            rearm_until = t + cfg.effective_rearm();
            ++adapt_count;
          }
        }
        row.min_kl = min_kl;
        row.integral = integral;
        row.decision = decision == monitor::Decision::Adapt
                           ? 2
                           : (decision == monitor::Decision::InferOnly ? 1 : 0);
      }
      report.monitor_trace.push_back(row);
    }

    if (i < steps) x = sim::rk4_step(cfg.schedule.active(cfg.plant, t), x, traj.inputs.back(), cfg.dt);
  }

  report.final_policy = dep.weights;
  report.final_theta = dep.theta;
  report.fitness_gp = fitness_gp;
  return report;
}

}  // namespace metacog::orchestrator
