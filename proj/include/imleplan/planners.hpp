#pragma once

#include <array>
#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "imleplan/costs.hpp"
#include "imleplan/generator.hpp"
#include "imleplan/serialize_util.hpp"
#include "imleplan/sim_data.hpp"
#include "imleplan/trajectory.hpp"

namespace imleplan {

// ---- proposal sources ----

struct ImleSource {
  std::shared_ptr<const GeneratorParams> params;
};

struct StraightLineSource {
  double speed = 1.0;  // m/s toward the goal, capped at the goal
};

struct GaussianSource {
  double sigma = 0.25;  // per-step noise around the previous plan
};

using ProposalSource = std::variant<ImleSource, StraightLineSource, GaussianSource>;

namespace detail {

inline Trajectory line_toward_goal(const Context& c, int horizon, double dt, double speed) {
  const int ds = c.state_dim();
  Trajectory out = make_trajectory(horizon, ds, 0, dt);
  double px = c.current_state[0];
  double py = ds > 1 ? c.current_state[1] : 0.0;
  const double gx2 = c.goal_dim() > 0 ? c.goal[0] : px;
  const double gy2 = c.goal_dim() > 1 ? c.goal[1] : py;
  for (int t = 0; t < horizon; ++t) {
    out.at(t, 0) = px;
    if (ds > 1) out.at(t, 1) = py;
    for (int d = 2; d < ds; ++d) out.at(t, d) = c.current_state[static_cast<std::size_t>(d)];
    if (t + 1 < horizon) {
      const double dx = gx2 - px, dy = gy2 - py;
      const double dist = std::sqrt(dx * dx + dy * dy);
      const double step = speed * dt;
      if (dist <= step || dist == 0.0) {
        px = gx2;
        py = gy2;
      } else {
        px += step * dx / dist;
        py += step * dy / dist;
      }
    }
  }
  return out;
}

// previous plan advanced one step, last state repeated, re-anchored on the
// current state
inline Trajectory shift_plan(const Trajectory& prev, const Context& c) {
  Trajectory out = prev;
  for (int t = 0; t + 1 < prev.horizon; ++t)
    for (int d = 0; d < prev.channels(); ++d) out.at(t, d) = prev.at(t + 1, d);
  for (int d = 0; d < out.state_dim && d < c.state_dim(); ++d)
    out.at(0, d) = c.current_state[static_cast<std::size_t>(d)];
  return out;
}

}  // namespace detail

// B candidate rollouts for one planning step. The previous plan is only used
// by the Gaussian source; every candidate starts at the context's state.
inline std::vector<Trajectory> sample_candidates(const ProposalSource& source, const Context& c, int count,
                                                 int horizon, double dt, Rng& rng,
                                                 const Trajectory* prev_plan = nullptr) {
  if (count < 1) throw ConfigError("need at least one candidate");
  if (horizon < 2) throw DimensionError("candidates need horizon >= 2");
  validate_context(c);
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(count));

  if (const auto* src = std::get_if<ImleSource>(&source)) {
    if (!src->params) throw ConfigError("generator source has no parameters");
    const GeneratorDims& dims = src->params->dims;
    if (dims.horizon != horizon || dims.dt != dt)
      throw DimensionError("generator horizon/dt do not match the planner");
    for (int b = 0; b < count; ++b) {
      Eigen::VectorXd z(dims.latent_dim);
      for (int d = 0; d < dims.latent_dim; ++d) z[d] = rng.gaussian();
      out.push_back(generator_forward(*src->params, z, c));
    }
    return out;
  }
  if (const auto* src = std::get_if<StraightLineSource>(&source)) {
    const Trajectory line = detail::line_toward_goal(c, horizon, dt, src->speed);
    for (int b = 0; b < count; ++b) out.push_back(line);
    return out;
  }
  const auto& src = std::get<GaussianSource>(source);
  Trajectory base;
  if (prev_plan && prev_plan->horizon == horizon)
    base = detail::shift_plan(*prev_plan, c);
  else {
    const double dist = [&] {
      const double dx = (c.goal_dim() > 0 ? c.goal[0] : c.current_state[0]) - c.current_state[0];
      const double dy = (c.goal_dim() > 1 && c.state_dim() > 1) ? c.goal[1] - c.current_state[1] : 0.0;
      return std::sqrt(dx * dx + dy * dy);
    }();
    base = detail::line_toward_goal(c, horizon, dt, dist / ((horizon - 1) * dt));
  }
  for (int b = 0; b < count; ++b) {
    Trajectory traj = base;
    for (int t = 1; t < horizon; ++t)
      for (int d = 0; d < traj.channels(); ++d) traj.at(t, d) += src.sigma * rng.gaussian();
    out.push_back(std::move(traj));
  }
  return out;
}

// index of the highest-reward candidate, lowest index on ties
inline std::size_t score_rank_select(const std::vector<Trajectory>& candidates,
                                     const std::function<double(const Trajectory&)>& reward) {
  if (candidates.empty()) throw ConfigError("score_rank_select: no candidates");
  std::size_t best = 0;
  double best_r = reward(candidates[0]);
  if (!std::isfinite(best_r)) throw NumericError("score_rank_select: non-finite reward");
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double r = reward(candidates[i]);
    if (!std::isfinite(r)) throw NumericError("score_rank_select: non-finite reward");
    if (r > best_r) {
      best = i;
      best_r = r;
    }
  }
  return best;
}

// softmax of negated, min-shifted costs at temperature lambda
inline std::vector<double> mppi_weights(const std::vector<double>& costs, double lambda) {
  if (costs.empty()) throw ConfigError("mppi weights: no costs");
  if (!(lambda > 0.0)) throw ConfigError("mppi weights: lambda must be > 0");
  double lo = costs[0];
  for (double c : costs) {
    if (!std::isfinite(c)) throw NumericError("mppi weights: non-finite cost");
    lo = std::min(lo, c);
  }
  std::vector<double> w(costs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    w[i] = std::exp(-(costs[i] - lo) / lambda);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

struct MppiConfig {
  double lambda = 0.5;
  int perturbations = 32;
  double sigma = 0.1;
};

inline void validate_mppi_config(const MppiConfig& cfg) {
  if (!(cfg.lambda > 0.0)) throw ConfigError("mppi: lambda must be > 0");
  if (cfg.perturbations < 0) throw ConfigError("mppi: perturbations must be >= 0");
  if (!(cfg.sigma >= 0.0)) throw ConfigError("mppi: sigma must be >= 0");
}

// One refinement step: best proposal becomes the nominal, Gaussian variations
// of it are cost-weighted and averaged. Zero perturbations or zero noise
// return the nominal untouched.
inline Trajectory mppi_step(const std::vector<Trajectory>& proposals,
                            const std::function<double(const Trajectory&)>& cost, const MppiConfig& cfg, Rng& rng) {
  validate_mppi_config(cfg);
  if (proposals.empty()) throw ConfigError("mppi step: no proposals");
  std::size_t best = 0;
  double best_c = cost(proposals[0]);
  if (!std::isfinite(best_c)) throw NumericError("mppi step: non-finite cost");
  for (std::size_t i = 1; i < proposals.size(); ++i) {
    const double c = cost(proposals[i]);
    if (!std::isfinite(c)) throw NumericError("mppi step: non-finite cost");
    if (c < best_c) {
      best = i;
      best_c = c;
    }
  }
  const Trajectory& nominal = proposals[best];
  if (cfg.perturbations == 0 || cfg.sigma <= 0.0) return nominal;

  std::vector<Trajectory> rollouts;
  rollouts.reserve(static_cast<std::size_t>(cfg.perturbations) + 1);
  rollouts.push_back(nominal);
  std::vector<double> costs;
  costs.reserve(rollouts.capacity());
  costs.push_back(best_c);
  for (int p = 0; p < cfg.perturbations; ++p) {
    Trajectory traj = nominal;
    for (int t = 1; t < traj.horizon; ++t)
      for (int d = 0; d < traj.channels(); ++d) traj.at(t, d) += cfg.sigma * rng.gaussian();
    costs.push_back(cost(traj));
    rollouts.push_back(std::move(traj));
  }
  const std::vector<double> w = mppi_weights(costs, cfg.lambda);

  Trajectory out = nominal;
  for (double& v : out.values) v = 0.0;
  for (std::size_t k = 0; k < rollouts.size(); ++k)
    for (std::size_t e = 0; e < out.values.size(); ++e) out.values[e] += w[k] * rollouts[k].values[e];
  for (int d = 0; d < out.channels(); ++d) out.at(0, d) = nominal.at(0, d);  // pin the start
  return out;
}

// ---- receding-horizon execution ----

struct PlannerSetup {
  ProposalSource source;
  enum class Mode { score_rank, mppi } mode = Mode::mppi;
  int candidates = 64;
  MppiConfig mppi;
  CostConfig cost;
  int horizon = 20;
  double dt = 0.4;
  double goal_tolerance = 0.2;
};

struct StepRecord {
  int t = 0;
  double x = 0.0, y = 0.0;
  CostBreakdown cost;
  double plan_ms = 0.0;
  Trajectory plan;
};

struct EpisodeLog {
  std::vector<StepRecord> steps;
  bool reached_goal = false;
  bool aborted = false;
  std::string abort_reason;
  double goal_error = 0.0;
};

inline std::string format_step_line(const StepRecord& r) {
  return "t=" + std::to_string(r.t) + " x=" + format_double(r.x) + " y=" + format_double(r.y) +
         " cost=" + format_double(r.cost.total) + " cbf=" + format_double(r.cost.cbf) +
         " clf=" + format_double(r.cost.clf) + " dev=" + format_double(r.cost.deviation) +
         " plan_ms=" + format_double(r.plan_ms);
}

// obstacle position histories for context building, oldest first
struct ObstacleTracker {
  std::vector<std::deque<std::array<double, 2>>> hist;

  void reset(const std::vector<Obstacle>& obs, int depth, double dt) {
    hist.assign(obs.size(), {});
    for (std::size_t o = 0; o < obs.size(); ++o)
      for (int j = depth - 1; j >= 0; --j)
        hist[o].push_back({obs[o].px - j * dt * obs[o].vx, obs[o].py - j * dt * obs[o].vy});
  }
  void push(const std::vector<Obstacle>& obs, int depth) {
    for (std::size_t o = 0; o < obs.size() && o < hist.size(); ++o) {
      hist[o].push_back({obs[o].px, obs[o].py});
      while (static_cast<int>(hist[o].size()) > depth) hist[o].pop_front();
    }
  }
};

// Context with the wanted_obstacles nearest obstacles (far dummies pad any
// shortfall) and history_len past positions per obstacle.
inline Context make_context(const std::array<double, 2>& robot, const std::array<double, 2>& goal,
                            const std::vector<Obstacle>& obstacles, const ObstacleTracker& tracker,
                            int wanted_obstacles, int history_len) {
  Context c;
  c.current_state = {robot[0], robot[1]};
  c.goal = {goal[0], goal[1]};
  c.obstacle_count = wanted_obstacles;
  c.history_len = history_len;
  std::vector<std::size_t> order(obstacles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double da = std::hypot(obstacles[a].px - robot[0], obstacles[a].py - robot[1]);
    const double db = std::hypot(obstacles[b].px - robot[0], obstacles[b].py - robot[1]);
    return da < db;
  });
  for (int o = 0; o < wanted_obstacles; ++o) {
    if (o < static_cast<int>(order.size())) {
      const auto& h = tracker.hist[order[static_cast<std::size_t>(o)]];
      for (int p = 0; p < history_len; ++p) {
        const int idx = std::max(0, static_cast<int>(h.size()) - history_len + p);
        c.obstacle_history.push_back(h[static_cast<std::size_t>(idx)][0]);
        c.obstacle_history.push_back(h[static_cast<std::size_t>(idx)][1]);
      }
    } else {
      for (int p = 0; p < history_len; ++p) {  // far dummy, effectively inert
        c.obstacle_history.push_back(robot[0] + 50.0);
        c.obstacle_history.push_back(robot[1] + 50.0);
      }
    }
  }
  return c;
}

inline std::pair<int, int> context_shape(const ProposalSource& source, const Scene& scene) {
  if (const auto* src = std::get_if<ImleSource>(&source)) {
    if (!src->params) throw ConfigError("generator source has no parameters");
    return {src->params->dims.obstacle_count, src->params->dims.history_len};
  }
  return {static_cast<int>(scene.obstacles.size()), 1};
}

// Closed loop: plan, execute the plan's first step with perfect tracking,
// advance the obstacles, replan. Stops at the goal tolerance or the scene
// duration. A planner exception aborts with the partial log kept.
inline EpisodeLog receding_horizon_run(const Scene& scene, const PlannerSetup& setup, std::uint64_t seed) {
  validate_cost_config(setup.cost);
  validate_mppi_config(setup.mppi);
  if (setup.candidates < 1) throw ConfigError("planner needs at least one candidate");
  if (!(scene.dt > 0.0) || scene.dt != setup.dt) throw DimensionError("scene dt does not match planner dt");
  if (scene.duration < 1) throw ConfigError("scene duration must be >= 1");

  const auto [ctx_obstacles, ctx_history] = context_shape(setup.source, scene);
  Rng rng(seed);
  EpisodeLog log;
  Scene live = scene;
  std::array<double, 2> robot = scene.robot_start;
  ObstacleTracker tracker;
  tracker.reset(live.obstacles, std::max(1, ctx_history), live.dt);
  std::optional<Trajectory> prev_plan;

  StepRecord start;
  start.t = 0;
  start.x = robot[0];
  start.y = robot[1];
  log.steps.push_back(start);

  for (int k = 0; k < scene.duration; ++k) {
    StepRecord rec;
    rec.t = k + 1;
    try {
      const auto tic = std::chrono::steady_clock::now();
      const Context ctx = make_context(robot, live.goal, live.obstacles, tracker, ctx_obstacles, ctx_history);
      const Forecast fc = constant_velocity_forecast(live, setup.horizon);
      const Trajectory* prev = prev_plan ? &*prev_plan : nullptr;
      const std::vector<Trajectory> cands =
          sample_candidates(setup.source, ctx, setup.candidates, setup.horizon, setup.dt, rng, prev);
      auto cost_of = [&](const Trajectory& tr) {
        return total_cost(tr, fc, live.goal[0], live.goal[1], setup.cost, prev).total;
      };
      Trajectory plan;
      if (setup.mode == PlannerSetup::Mode::score_rank) {
        const std::size_t idx = score_rank_select(cands, [&](const Trajectory& tr) { return -cost_of(tr); });
        plan = cands[idx];
      } else {
        plan = mppi_step(cands, cost_of, setup.mppi, rng);
      }
      const auto toc = std::chrono::steady_clock::now();

      rec.cost = total_cost(plan, fc, live.goal[0], live.goal[1], setup.cost, prev);
      rec.plan_ms = std::chrono::duration<double, std::milli>(toc - tic).count();
      robot = {plan.at(1, 0), plan.at(1, 1)};
      rec.x = robot[0];
      rec.y = robot[1];
      rec.plan = plan;
      prev_plan = std::move(plan);
    } catch (const Error& e) {
      log.aborted = true;
      log.abort_reason = e.what();
      break;
    }
    step_scene(live);
    tracker.push(live.obstacles, std::max(1, ctx_history));
    log.steps.push_back(std::move(rec));

    const double err = std::hypot(robot[0] - live.goal[0], robot[1] - live.goal[1]);
    if (err <= setup.goal_tolerance) {
      log.reached_goal = true;
      break;
    }
  }
  log.goal_error = std::hypot(robot[0] - scene.goal[0], robot[1] - scene.goal[1]);
  return log;
}

}  // namespace imleplan
