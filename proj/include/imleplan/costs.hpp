#pragma once

#include <cmath>
#include <vector>

#include "imleplan/errors.hpp"
#include "imleplan/sim_data.hpp"
#include "imleplan/trajectory.hpp"

namespace imleplan {

struct CostConfig {
  double safety_radius = 0.5;
  double barrier_alpha = 0.2;      // per-step allowed barrier decay
  double deviation_discount = 0.9;
  double cbf_weight = 10.0;
  double clf_weight = 1.0;
  double deviation_weight = 0.2;
};

inline void validate_cost_config(const CostConfig& cfg) {
  if (!(cfg.safety_radius > 0.0)) throw ConfigError("safety radius must be > 0");
  if (!(cfg.barrier_alpha > 0.0) || !(cfg.barrier_alpha <= 1.0)) throw ConfigError("barrier alpha must be in (0, 1]");
  if (!(cfg.deviation_discount > 0.0) || !(cfg.deviation_discount <= 1.0))
    throw ConfigError("deviation discount must be in (0, 1]");
  if (cfg.cbf_weight < 0 || cfg.clf_weight < 0 || cfg.deviation_weight < 0)
    throw ConfigError("cost weights must be >= 0");
}

struct CostBreakdown {
  double cbf = 0.0;        // raw barrier penalty
  double clf = 0.0;        // raw goal-progress cost
  double deviation = 0.0;  // raw plan-consistency penalty
  double total = 0.0;      // weighted sum
};

namespace detail {
inline double hinge(double v) { return v > 0.0 ? v : 0.0; }

inline double barrier(const Trajectory& traj, const Forecast& fc, int t, int o, double r2) {
  const double dx = traj.at(t, 0) - fc.x(o, t);
  const double dy = traj.at(t, 1) - fc.y(o, t);
  return dx * dx + dy * dy - r2;
}
}  // namespace detail

// Discrete-time barrier penalty: h = squared clearance minus squared radius;
// violations of h_{t+1} >= (1 - alpha) h_t and of h_t >= 0 are hinged and summed.
inline double cbf_penalty(const Trajectory& traj, const Forecast& forecast, double radius, double alpha) {
  if (traj.state_dim < 2) throw DimensionError("cbf penalty needs 2-d positions");
  if (forecast.obstacle_count > 0 && forecast.steps < traj.horizon)
    throw DimensionError("forecast horizon is shorter than the trajectory");
  const double r2 = radius * radius;
  double acc = 0.0;
  for (int o = 0; o < forecast.obstacle_count; ++o) {
    double h_prev = detail::barrier(traj, forecast, 0, o, r2);
    acc += detail::hinge(-h_prev);
    for (int t = 1; t < traj.horizon; ++t) {
      const double h = detail::barrier(traj, forecast, t, o, r2);
      acc += detail::hinge(-(h - (1.0 - alpha) * h_prev));
      acc += detail::hinge(-h);
      h_prev = h;
    }
  }
  return acc;
}

// Goal-progress cost: terminal squared distance plus hinged per-step increases.
inline double clf_cost(const Trajectory& traj, double goal_x, double goal_y) {
  if (traj.state_dim < 2) throw DimensionError("clf cost needs 2-d positions");
  auto V = [&](int t) {
    const double dx = traj.at(t, 0) - goal_x;
    const double dy = traj.at(t, 1) - goal_y;
    return dx * dx + dy * dy;
  };
  double acc = V(traj.horizon - 1);
  double v_prev = V(0);
  for (int t = 1; t < traj.horizon; ++t) {
    const double v = V(t);
    acc += detail::hinge(v - v_prev);
    v_prev = v;
  }
  return acc;
}

// Discounted squared distance to the previous plan shifted one step forward.
inline double deviation_penalty(const Trajectory& traj, const Trajectory& prev_plan, double discount) {
  if (traj.state_dim < 2 || prev_plan.state_dim < 2) throw DimensionError("deviation penalty needs 2-d positions");
  if (prev_plan.horizon < 2) throw DimensionError("previous plan is too short");
  double acc = 0.0;
  double g = 1.0;
  const int steps = std::min(traj.horizon, prev_plan.horizon - 1);
  for (int t = 0; t < steps; ++t) {
    const double dx = traj.at(t, 0) - prev_plan.at(t + 1, 0);
    const double dy = traj.at(t, 1) - prev_plan.at(t + 1, 1);
    acc += g * (dx * dx + dy * dy);
    g *= discount;
  }
  return acc;
}

inline CostBreakdown total_cost(const Trajectory& traj, const Forecast& forecast, double goal_x, double goal_y,
                                const CostConfig& cfg, const Trajectory* prev_plan = nullptr) {
  CostBreakdown b;
  b.cbf = cbf_penalty(traj, forecast, cfg.safety_radius, cfg.barrier_alpha);
  b.clf = clf_cost(traj, goal_x, goal_y);
  b.deviation = prev_plan ? deviation_penalty(traj, *prev_plan, cfg.deviation_discount) : 0.0;
  b.total = cfg.cbf_weight * b.cbf + cfg.clf_weight * b.clf + cfg.deviation_weight * b.deviation;
  return b;
}

// Exact subgradient of the weighted total w.r.t. the planned positions,
// flattened H x 2. Inactive hinges (and exact kinks) contribute zero.
inline std::vector<double> cost_gradient(const Trajectory& traj, const Forecast& forecast, double goal_x,
                                         double goal_y, const CostConfig& cfg,
                                         const Trajectory* prev_plan = nullptr) {
  if (traj.state_dim < 2) throw DimensionError("cost gradient needs 2-d positions");
  const int H = traj.horizon;
  std::vector<double> g(static_cast<std::size_t>(H) * 2, 0.0);
  auto gx = [&](int t) -> double& { return g[static_cast<std::size_t>(t) * 2]; };
  auto gy = [&](int t) -> double& { return g[static_cast<std::size_t>(t) * 2 + 1]; };

  if (cfg.cbf_weight > 0.0 && forecast.obstacle_count > 0) {
    if (forecast.steps < H) throw DimensionError("forecast horizon is shorter than the trajectory");
    const double r2 = cfg.safety_radius * cfg.safety_radius;
    for (int o = 0; o < forecast.obstacle_count; ++o) {
      for (int t = 0; t < H; ++t) {
        const double h = detail::barrier(traj, forecast, t, o, r2);
        if (-h > 0.0) {
          gx(t) += cfg.cbf_weight * -2.0 * (traj.at(t, 0) - forecast.x(o, t));
          gy(t) += cfg.cbf_weight * -2.0 * (traj.at(t, 1) - forecast.y(o, t));
        }
        if (t >= 1) {
          const double h_prev = detail::barrier(traj, forecast, t - 1, o, r2);
          if (-(h - (1.0 - cfg.barrier_alpha) * h_prev) > 0.0) {
            gx(t) += cfg.cbf_weight * -2.0 * (traj.at(t, 0) - forecast.x(o, t));
            gy(t) += cfg.cbf_weight * -2.0 * (traj.at(t, 1) - forecast.y(o, t));
            gx(t - 1) += cfg.cbf_weight * (1.0 - cfg.barrier_alpha) * 2.0 * (traj.at(t - 1, 0) - forecast.x(o, t - 1));
            gy(t - 1) += cfg.cbf_weight * (1.0 - cfg.barrier_alpha) * 2.0 * (traj.at(t - 1, 1) - forecast.y(o, t - 1));
          }
        }
      }
    }
  }

  if (cfg.clf_weight > 0.0) {
    auto V = [&](int t) {
      const double dx = traj.at(t, 0) - goal_x;
      const double dy = traj.at(t, 1) - goal_y;
      return dx * dx + dy * dy;
    };
    gx(H - 1) += cfg.clf_weight * 2.0 * (traj.at(H - 1, 0) - goal_x);
    gy(H - 1) += cfg.clf_weight * 2.0 * (traj.at(H - 1, 1) - goal_y);
    for (int t = 1; t < H; ++t) {
      if (V(t) - V(t - 1) > 0.0) {
        gx(t) += cfg.clf_weight * 2.0 * (traj.at(t, 0) - goal_x);
        gy(t) += cfg.clf_weight * 2.0 * (traj.at(t, 1) - goal_y);
        gx(t - 1) += cfg.clf_weight * -2.0 * (traj.at(t - 1, 0) - goal_x);
        gy(t - 1) += cfg.clf_weight * -2.0 * (traj.at(t - 1, 1) - goal_y);
      }
    }
  }

  if (cfg.deviation_weight > 0.0 && prev_plan) {
    double disc = 1.0;
    const int steps = std::min(H, prev_plan->horizon - 1);
    for (int t = 0; t < steps; ++t) {
      gx(t) += cfg.deviation_weight * disc * 2.0 * (traj.at(t, 0) - prev_plan->at(t + 1, 0));
      gy(t) += cfg.deviation_weight * disc * 2.0 * (traj.at(t, 1) - prev_plan->at(t + 1, 1));
      disc *= cfg.deviation_discount;
    }
  }
  return g;
}

// Conservative clearance reward used to weight navigation datasets: negative
// barrier penalty at an enlarged radius, with obstacle motion extrapolated
// from the context history (static when only one point is known).
inline double navigation_reward(const Trajectory& traj, const Context& c, double radius = 1.0, double alpha = 0.2) {
  if (c.obstacle_count == 0 || c.history_len == 0) return 0.0;
  Scene sc;
  sc.dt = traj.dt;
  for (int o = 0; o < c.obstacle_count; ++o) {
    Obstacle ob;
    const int last = c.history_len - 1;
    ob.px = c.obstacle_x(o, last);
    ob.py = c.obstacle_y(o, last);
    if (c.history_len >= 2) {
      ob.vx = (ob.px - c.obstacle_x(o, last - 1)) / traj.dt;
      ob.vy = (ob.py - c.obstacle_y(o, last - 1)) / traj.dt;
    }
    sc.obstacles.push_back(ob);
  }
  const Forecast fc = constant_velocity_forecast(sc, traj.horizon);
  return -cbf_penalty(traj, fc, radius, alpha);
}

inline void attach_navigation_returns(Dataset& ds, double radius = 1.0, double alpha = 0.2) {
  for (WeightedSample& s : ds.samples) s.return_value = navigation_reward(s.trajectory, s.context, radius, alpha);
}

}  // namespace imleplan
