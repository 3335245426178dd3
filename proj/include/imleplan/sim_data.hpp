#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <fstream>
#include <numbers>
#include <string>
#include <unordered_map>
#include <vector>

#include "imleplan/errors.hpp"
#include "imleplan/rng.hpp"
#include "imleplan/serialize_util.hpp"
#include "imleplan/trajectory.hpp"

namespace imleplan {

struct Obstacle {
  double px = 0, py = 0;
  double vx = 0, vy = 0;
};

struct Scene {
  std::array<double, 2> robot_start{0, 0};
  std::array<double, 2> goal{0, 0};
  std::vector<Obstacle> obstacles;
  int duration = 0;  // max executed steps
  double dt = 0.0;
};

// Flat per-obstacle position rollout under a constant-velocity assumption.
// Step 0 is the current position.
struct Forecast {
  int obstacle_count = 0;
  int steps = 0;
  std::vector<double> points;  // obstacle major, then step, then x,y

  double x(int o, int t) const { return points[static_cast<std::size_t>((o * steps + t) * 2)]; }
  double y(int o, int t) const { return points[static_cast<std::size_t>((o * steps + t) * 2 + 1)]; }
};

inline Forecast constant_velocity_forecast(const Scene& scene, int steps) {
  if (steps < 1) throw DimensionError("forecast needs steps >= 1");
  if (!(scene.dt > 0.0)) throw DimensionError("scene dt must be positive");
  Forecast f;
  f.obstacle_count = static_cast<int>(scene.obstacles.size());
  f.steps = steps;
  f.points.resize(static_cast<std::size_t>(f.obstacle_count) * static_cast<std::size_t>(steps) * 2);
  std::size_t k = 0;
  for (const Obstacle& o : scene.obstacles)
    for (int t = 0; t < steps; ++t) {
      f.points[k++] = o.px + t * scene.dt * o.vx;
      f.points[k++] = o.py + t * scene.dt * o.vy;
    }
  return f;
}

inline void step_scene(Scene& scene) {
  if (!(scene.dt > 0.0)) throw DimensionError("scene dt must be positive");
  for (Obstacle& o : scene.obstacles) {
    o.px += scene.dt * o.vx;
    o.py += scene.dt * o.vy;
  }
}

// Ground-truth obstacle position k steps after scene start.
inline std::array<double, 2> obstacle_position_at(const Scene& scene, int o, int k) {
  const Obstacle& ob = scene.obstacles[static_cast<std::size_t>(o)];
  return {ob.px + k * scene.dt * ob.vx, ob.py + k * scene.dt * ob.vy};
}

// ---- bimodal navigation set ----
// Start at the origin, goal straight ahead on the x axis, one obstacle parked
// midway. Half of the samples detour left (+y), half right (-y), with
// Gaussian waypoint noise on every step after the first.

struct BimodalOptions {
  double goal_dist = 8.0;
  double amplitude = 1.5;
  double noise_sigma = 0.05;
};

inline Dataset generate_bimodal_dataset(int n, int horizon, double dt, std::uint64_t seed,
                                        const BimodalOptions& opt = {}) {
  if (n < 2) throw ConfigError("bimodal set needs n >= 2");
  if (horizon < 2) throw DimensionError("bimodal set needs horizon >= 2");
  if (!(dt > 0.0)) throw DimensionError("bimodal set needs dt > 0");
  if (!(opt.noise_sigma >= 0.0)) throw ConfigError("bimodal noise sigma must be >= 0");
  Rng rng(seed);
  Dataset ds;
  ds.horizon = horizon;
  ds.state_dim = 2;
  ds.action_dim = 0;
  ds.goal_dim = 2;
  ds.obstacle_count = 1;
  ds.history_len = 1;
  ds.dt = dt;
  for (int i = 0; i < n; ++i) {
    const double side = (i % 2 == 0) ? 1.0 : -1.0;  // alternate so odd n stays near-even
    WeightedSample s;
    s.trajectory = make_trajectory(horizon, 2, 0, dt);
    for (int t = 0; t < horizon; ++t) {
      const double u = static_cast<double>(t) / static_cast<double>(horizon - 1);
      double x = u * opt.goal_dist;
      double y = side * opt.amplitude * std::sin(std::numbers::pi * u);
      if (t > 0) {
        x += opt.noise_sigma * rng.gaussian();
        y += opt.noise_sigma * rng.gaussian();
      }
      s.trajectory.at(t, 0) = x;
      s.trajectory.at(t, 1) = y;
    }
    s.context.current_state = {0.0, 0.0};
    s.context.goal = {opt.goal_dist, 0.0};
    s.context.obstacle_count = 1;
    s.context.history_len = 1;
    s.context.obstacle_history = {opt.goal_dist / 2.0, 0.0};
    add_sample(ds, std::move(s));
  }
  ds.metadata["source"] = "bimodal";
  return ds;
}

// re-cut each demonstration into per-step suffix windows: window k starts at
// state k and holds the final state once the source runs out, so arriving and
// stopping are themselves demonstrated. Conditioning keeps only the current
// state and the goal — obstacle handling belongs to the plan-time costs, and
// demo-corridor obstacle features generalize poorly off the corridor.
inline Dataset expand_goal_suffixes(const Dataset& input, int stride = 1) {
  if (input.samples.empty()) throw ConfigError("suffix expansion needs a non-empty dataset");
  if (stride < 1) throw ConfigError("suffix stride must be >= 1");
  Dataset out;
  for (const WeightedSample& s : input.samples) {
    for (int k = 0; k < input.horizon; k += stride) {
      WeightedSample w;
      w.trajectory = make_trajectory(input.horizon, input.state_dim, input.action_dim, input.dt);
      for (int i = 0; i < input.horizon; ++i) {
        const int src = std::min(k + i, input.horizon - 1);
        for (int d = 0; d < w.trajectory.channels(); ++d) w.trajectory.at(i, d) = s.trajectory.at(src, d);
      }
      const auto cs = s.trajectory.state(k);
      w.context.current_state.assign(cs.begin(), cs.end());
      w.context.goal = s.context.goal;
      w.context.obstacle_count = 0;
      w.context.history_len = 0;
      w.return_value = s.return_value;
      w.weight = s.weight;
      add_sample(out, std::move(w));
    }
  }
  out.metadata = input.metadata;
  return out;
}

// ---- augmentation ----

struct AugmentationSpec {
  std::vector<std::array<double, 2>> translations{{0.0, 0.0}};
  std::vector<double> rotations{0.0};
  int smoothing_window = 1;
};

inline void validate_augmentation(const AugmentationSpec& spec, int horizon) {
  if (spec.translations.empty() || spec.rotations.empty())
    throw ConfigError("augmentation needs at least one translation and one rotation");
  for (double r : spec.rotations)
    if (!(r > -std::numbers::pi - 1e-12) || !(r <= std::numbers::pi + 1e-12))
      throw ConfigError("augmentation rotations must lie in (-pi, pi]");
  if (spec.smoothing_window < 1 || spec.smoothing_window % 2 == 0)
    throw ConfigError("smoothing window must be odd and >= 1");
  if (spec.smoothing_window > horizon) throw ConfigError("smoothing window exceeds the horizon");
}

namespace detail {

inline void rotate_translate(double& x, double& y, double c, double s, double ax, double ay, double tx, double ty) {
  const double rx = x - ax, ry = y - ay;
  x = c * rx - s * ry + ax + tx;
  y = s * rx + c * ry + ay + ty;
}

// centered moving average over state channels, edges replicated
inline void smooth_states(Trajectory& traj, int window) {
  if (window <= 1) return;
  const int half = window / 2;
  const int H = traj.horizon;
  std::vector<double> src = traj.values;
  const int ch = traj.channels();
  for (int t = 0; t < H; ++t)
    for (int d = 0; d < traj.state_dim; ++d) {
      double acc = 0.0;
      for (int j = -half; j <= half; ++j) {
        int tj = t + j;
        if (tj < 0) tj = 0;
        if (tj > H - 1) tj = H - 1;
        acc += src[static_cast<std::size_t>(tj * ch + d)];
      }
      traj.at(t, d) = acc / window;
    }
}

}  // namespace detail

using SampleReward = std::function<double(const Trajectory&, const Context&)>;

// Each input sample yields |translations| x |rotations| copies. Rotation is
// about the trajectory's first position and is applied before the translation;
// context positions get the same rigid transform. Smoothing runs last.
inline Dataset augment(const Dataset& input, const AugmentationSpec& spec, const SampleReward& reward = {}) {
  validate_augmentation(spec, input.horizon == 0 ? spec.smoothing_window : input.horizon);
  Dataset out;
  out.horizon = input.horizon;
  out.state_dim = input.state_dim;
  out.action_dim = input.action_dim;
  out.goal_dim = input.goal_dim;
  out.obstacle_count = input.obstacle_count;
  out.history_len = input.history_len;
  out.dt = input.dt;
  out.metadata = input.metadata;
  const bool rotates = [&] {
    for (double r : spec.rotations)
      if (r != 0.0) return true;
    return false;
  }();
  if (rotates && input.state_dim < 2)
    throw DimensionError("rotation augmentation needs 2-d positions");
  for (const WeightedSample& in : input.samples) {
    const double ax = in.trajectory.at(0, 0);
    const double ay = in.trajectory.state_dim > 1 ? in.trajectory.at(0, 1) : 0.0;
    for (const auto& tr : spec.translations)
      for (double rot : spec.rotations) {
        WeightedSample s = in;
        const double c = std::cos(rot), sn = std::sin(rot);
        for (int t = 0; t < s.trajectory.horizon; ++t) {
          double x = s.trajectory.at(t, 0), y = s.trajectory.at(t, 1);
          detail::rotate_translate(x, y, c, sn, ax, ay, tr[0], tr[1]);
          s.trajectory.at(t, 0) = x;
          s.trajectory.at(t, 1) = y;
          if (s.trajectory.state_dim >= 4) {  // velocity channels rotate only
            const double vx = s.trajectory.at(t, 2), vy = s.trajectory.at(t, 3);
            s.trajectory.at(t, 2) = c * vx - sn * vy;
            s.trajectory.at(t, 3) = sn * vx + c * vy;
          }
        }
        if (s.context.state_dim() >= 2) {
          double x = s.context.current_state[0], y = s.context.current_state[1];
          detail::rotate_translate(x, y, c, sn, ax, ay, tr[0], tr[1]);
          s.context.current_state[0] = x;
          s.context.current_state[1] = y;
        }
        if (s.context.goal_dim() >= 2) {
          double x = s.context.goal[0], y = s.context.goal[1];
          detail::rotate_translate(x, y, c, sn, ax, ay, tr[0], tr[1]);
          s.context.goal[0] = x;
          s.context.goal[1] = y;
        }
        for (std::size_t j = 0; j + 1 < s.context.obstacle_history.size(); j += 2) {
          double x = s.context.obstacle_history[j], y = s.context.obstacle_history[j + 1];
          detail::rotate_translate(x, y, c, sn, ax, ay, tr[0], tr[1]);
          s.context.obstacle_history[j] = x;
          s.context.obstacle_history[j + 1] = y;
        }
        detail::smooth_states(s.trajectory, spec.smoothing_window);
        // keep the context anchored on the (possibly smoothed) first state
        for (int d = 0; d < s.trajectory.state_dim && d < s.context.state_dim(); ++d)
          s.context.current_state[static_cast<std::size_t>(d)] = s.trajectory.at(0, d);
        if (reward) s.return_value = reward(s.trajectory, s.context);
        add_sample(out, std::move(s));
      }
  }
  return out;
}

// ---- raw recordings ----
// Row format: frame_id agent_id x y (whitespace separated). Frames are mapped
// to seconds via frame_dt, resampled to the requested dt by linear
// interpolation, then sliced into windows of length horizon at stride
// max(1, horizon/2) plus a final end-anchored window.

struct RawLoadOptions {
  double frame_dt = 0.4;  // seconds per frame id unit
};

inline Dataset load_raw_trajectories(std::istream& is, int horizon, double dt, const RawLoadOptions& opt = {},
                                     const std::string& name = "<stream>") {
  if (horizon < 2) throw DimensionError("raw load needs horizon >= 2");
  if (!(dt > 0.0)) throw DimensionError("raw load needs dt > 0");
  if (!(opt.frame_dt > 0.0)) throw ConfigError("raw load needs frame_dt > 0");

  struct Row {
    double time, x, y;
  };
  std::vector<std::string> agent_order;
  std::unordered_map<std::string, std::vector<Row>> agents;

  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    if (toks.size() != 4) throw IoError(where + ": expected 4 fields frame_id agent_id x y");
    Row row;
    try {
      row.time = parse_double(toks[0], where) * opt.frame_dt;
      parse_double(toks[1], where);  // agent ids must be numeric, key kept as the token
      row.x = parse_double(toks[2], where);
      row.y = parse_double(toks[3], where);
    } catch (const IoError&) {
      throw;
    }
    if (agents.find(toks[1]) == agents.end()) agent_order.push_back(toks[1]);
    agents[toks[1]].push_back(row);
  }

  Dataset ds;
  ds.horizon = horizon;
  ds.state_dim = 2;
  ds.action_dim = 0;
  ds.goal_dim = 2;
  ds.obstacle_count = 0;
  ds.history_len = 0;
  ds.dt = dt;

  long skipped = 0;
  for (const std::string& id : agent_order) {
    auto& rows = agents[id];
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.time < b.time; });
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].time == rows[i - 1].time)
        throw IoError(name + ": agent " + id + " has duplicate frames");

    // uniform resample
    std::vector<std::array<double, 2>> pts;
    if (!rows.empty()) {
      const double t0 = rows.front().time, t1 = rows.back().time;
      std::size_t seg = 0;
      for (int k = 0;; ++k) {
        const double t = t0 + k * dt;
        if (t > t1 + 1e-9) break;
        while (seg + 2 < rows.size() && rows[seg + 1].time < t) ++seg;
        const Row& a = rows[seg];
        const Row& b = rows[seg + 1 < rows.size() ? seg + 1 : seg];
        double alpha = 0.0;
        if (b.time > a.time) alpha = (t - a.time) / (b.time - a.time);
        if (alpha < 0.0) alpha = 0.0;
        if (alpha > 1.0) alpha = 1.0;
        pts.push_back({(1 - alpha) * a.x + alpha * b.x, (1 - alpha) * a.y + alpha * b.y});
      }
    }
    const int m = static_cast<int>(pts.size());
    if (m < horizon) {
      ++skipped;
      continue;
    }

    const int stride = std::max(1, horizon / 2);
    std::vector<int> starts;
    for (int st = 0; st + horizon <= m; st += stride) starts.push_back(st);
    if (starts.empty() || starts.back() != m - horizon) starts.push_back(m - horizon);

    for (int st : starts) {
      WeightedSample s;
      s.trajectory = make_trajectory(horizon, 2, 0, dt);
      for (int t = 0; t < horizon; ++t) {
        s.trajectory.at(t, 0) = pts[static_cast<std::size_t>(st + t)][0];
        s.trajectory.at(t, 1) = pts[static_cast<std::size_t>(st + t)][1];
      }
      s.context.current_state = {s.trajectory.at(0, 0), s.trajectory.at(0, 1)};
      s.context.goal = {s.trajectory.at(horizon - 1, 0), s.trajectory.at(horizon - 1, 1)};
      s.context.obstacle_count = 0;
      s.context.history_len = 0;
      add_sample(ds, std::move(s));
    }
  }
  ds.metadata["source"] = "raw";
  ds.metadata["skipped_agents"] = std::to_string(skipped);
  return ds;
}

inline Dataset load_raw_trajectories(const std::string& path, int horizon, double dt, const RawLoadOptions& opt = {}) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  return load_raw_trajectories(f, horizon, dt, opt, path);
}

// ---- synthetic crossing scenes ----
// One obstacle cuts across the straight start-goal corridor, timed so that a
// blind straight run meets it mid-route.

struct CrossingSceneOptions {
  double route_length = 8.0;
  double cross_x_min = 3.0, cross_x_max = 5.0;
  double side_offset_min = 2.0, side_offset_max = 3.0;
  double timing_jitter = 0.8;   // seconds around the blind meeting time
  double drift_max = 0.15;      // along-corridor obstacle drift, m/s
  double nominal_speed = 1.0;   // assumed robot speed for the timing
  int duration = 40;
};

inline std::vector<Scene> make_crossing_scenes(int count, double dt, std::uint64_t seed,
                                               const CrossingSceneOptions& opt = {}) {
  if (count < 1) throw ConfigError("need at least one scene");
  if (!(dt > 0.0)) throw DimensionError("scenes need dt > 0");
  Rng rng(seed);
  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Scene sc;
    sc.robot_start = {0.0, 0.0};
    sc.goal = {opt.route_length, 0.0};
    sc.dt = dt;
    sc.duration = opt.duration;
    const double side = (rng.uniform() < 0.5) ? 1.0 : -1.0;
    const double xc = rng.uniform_in(opt.cross_x_min, opt.cross_x_max);
    const double off = rng.uniform_in(opt.side_offset_min, opt.side_offset_max);
    const double t_meet = xc / opt.nominal_speed + rng.uniform_in(-opt.timing_jitter, opt.timing_jitter);
    Obstacle ob;
    ob.vy = -side * off / t_meet;
    ob.vx = rng.uniform_in(-opt.drift_max, opt.drift_max);
    ob.px = xc - ob.vx * t_meet;
    ob.py = side * off;
    sc.obstacles.push_back(ob);
    scenes.push_back(sc);
  }
  return scenes;
}

}  // namespace imleplan
