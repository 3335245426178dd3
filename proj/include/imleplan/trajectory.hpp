#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "imleplan/errors.hpp"

namespace imleplan {

// A planned or recorded rollout: H steps of [state, action] channels, flat and
// time major. Actions are optional (action_dim 0 for pure navigation paths).
struct Trajectory {
  int horizon = 0;
  int state_dim = 0;
  int action_dim = 0;
  double dt = 0.0;
  std::vector<double> values;

  int channels() const { return state_dim + action_dim; }

  double& at(int t, int d) { return values[static_cast<std::size_t>(t * channels() + d)]; }
  double at(int t, int d) const { return values[static_cast<std::size_t>(t * channels() + d)]; }

  std::span<const double> state(int t) const {
    return {values.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(channels()),
            static_cast<std::size_t>(state_dim)};
  }
  std::span<const double> action(int t) const {
    return {values.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(channels()) + state_dim,
            static_cast<std::size_t>(action_dim)};
  }
};

inline Trajectory make_trajectory(int horizon, int state_dim, int action_dim, double dt) {
  if (horizon < 2) throw DimensionError("trajectory horizon must be >= 2");
  if (state_dim < 1 || action_dim < 0) throw DimensionError("trajectory needs state_dim >= 1, action_dim >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DimensionError("trajectory dt must be positive and finite");
  Trajectory out;
  out.horizon = horizon;
  out.state_dim = state_dim;
  out.action_dim = action_dim;
  out.dt = dt;
  out.values.assign(static_cast<std::size_t>(horizon) * static_cast<std::size_t>(state_dim + action_dim), 0.0);
  return out;
}

inline void validate_trajectory(const Trajectory& t) {
  if (t.horizon < 2) throw DimensionError("trajectory horizon must be >= 2");
  if (t.state_dim < 1 || t.action_dim < 0) throw DimensionError("trajectory needs state_dim >= 1, action_dim >= 0");
  if (!(t.dt > 0.0) || !std::isfinite(t.dt)) throw DimensionError("trajectory dt must be positive and finite");
  const std::size_t want = static_cast<std::size_t>(t.horizon) * static_cast<std::size_t>(t.channels());
  if (t.values.size() != want) throw DimensionError("trajectory value buffer size does not match dims");
  for (double v : t.values)
    if (!std::isfinite(v)) throw DimensionError("trajectory contains non-finite values");
}

// Planning context: where the robot is, where it wants to go, and what it has
// seen of the obstacles. obstacle_history holds obstacle_count blocks of
// history_len (x, y) pairs each, oldest first within a block.
struct Context {
  std::vector<double> current_state;
  std::vector<double> goal;
  int obstacle_count = 0;
  int history_len = 0;
  std::vector<double> obstacle_history;

  int state_dim() const { return static_cast<int>(current_state.size()); }
  int goal_dim() const { return static_cast<int>(goal.size()); }

  double obstacle_x(int o, int p) const {
    return obstacle_history[static_cast<std::size_t>((o * history_len + p) * 2)];
  }
  double obstacle_y(int o, int p) const {
    return obstacle_history[static_cast<std::size_t>((o * history_len + p) * 2 + 1)];
  }
};

inline void validate_context(const Context& c) {
  if (c.current_state.empty()) throw DimensionError("context needs a current state");
  if (c.obstacle_count < 0 || c.history_len < 0) throw DimensionError("context obstacle dims must be >= 0");
  const std::size_t want = static_cast<std::size_t>(c.obstacle_count) * static_cast<std::size_t>(c.history_len) * 2;
  if (c.obstacle_history.size() != want) throw DimensionError("context obstacle history size does not match dims");
  for (double v : c.current_state)
    if (!std::isfinite(v)) throw DimensionError("context contains non-finite values");
  for (double v : c.goal)
    if (!std::isfinite(v)) throw DimensionError("context contains non-finite values");
  for (double v : c.obstacle_history)
    if (!std::isfinite(v)) throw DimensionError("context contains non-finite values");
}

struct WeightedSample {
  Trajectory trajectory;
  Context context;
  double return_value = 0.0;
  double weight = 1.0;
};

struct Dataset {
  int horizon = 0;
  int state_dim = 0;
  int action_dim = 0;
  int goal_dim = 0;
  int obstacle_count = 0;
  int history_len = 0;
  double dt = 0.0;
  std::vector<WeightedSample> samples;
  std::map<std::string, std::string> metadata;
};

inline void add_sample(Dataset& ds, WeightedSample s) {
  validate_trajectory(s.trajectory);
  validate_context(s.context);
  if (!std::isfinite(s.return_value)) throw NumericError("sample return must be finite");
  if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) throw DimensionError("sample weight must be finite and >= 0");
  if (ds.samples.empty() && ds.horizon == 0) {
    ds.horizon = s.trajectory.horizon;
    ds.state_dim = s.trajectory.state_dim;
    ds.action_dim = s.trajectory.action_dim;
    ds.goal_dim = s.context.goal_dim();
    ds.obstacle_count = s.context.obstacle_count;
    ds.history_len = s.context.history_len;
    ds.dt = s.trajectory.dt;
  }
  if (s.trajectory.horizon != ds.horizon || s.trajectory.state_dim != ds.state_dim ||
      s.trajectory.action_dim != ds.action_dim || s.trajectory.dt != ds.dt)
    throw DimensionError("sample trajectory dims do not match dataset");
  if (s.context.state_dim() != ds.state_dim || s.context.goal_dim() != ds.goal_dim ||
      s.context.obstacle_count != ds.obstacle_count || s.context.history_len != ds.history_len)
    throw DimensionError("sample context dims do not match dataset");
  ds.samples.push_back(std::move(s));
}

inline void validate_dataset(const Dataset& ds) {
  for (const WeightedSample& s : ds.samples) {
    validate_trajectory(s.trajectory);
    validate_context(s.context);
    if (s.trajectory.horizon != ds.horizon || s.trajectory.dt != ds.dt ||
        s.trajectory.state_dim != ds.state_dim || s.trajectory.action_dim != ds.action_dim)
      throw DimensionError("dataset sample dims are inconsistent");
  }
}

// Flat l2 distance over every channel of both rollouts.
inline double trajectory_distance(const Trajectory& a, const Trajectory& b) {
  if (a.horizon != b.horizon || a.state_dim != b.state_dim || a.action_dim != b.action_dim)
    throw DimensionError("trajectory_distance: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    acc += d * d;
  }
  const double out = std::sqrt(acc);
  if (!std::isfinite(out)) throw DimensionError("trajectory_distance: non-finite input");
  return out;
}

using StepReward = std::function<double(std::span<const double> state, std::span<const double> action)>;

// Plain sum of per-step rewards, no discounting.
inline double compute_return(const Trajectory& traj, const StepReward& reward) {
  double acc = 0.0;
  for (int t = 0; t < traj.horizon; ++t) {
    const double r = reward(traj.state(t), traj.action(t));
    if (!std::isfinite(r)) throw NumericError("compute_return: reward is non-finite at step " + std::to_string(t));
    acc += r;
  }
  return acc;
}

}  // namespace imleplan
