#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "imleplan/planners.hpp"
#include "imleplan/serialize_util.hpp"
#include "imleplan/sim_data.hpp"

namespace imleplan {

// executed positions, one (x, y) per logged step
inline std::vector<std::array<double, 2>> executed_path(const EpisodeLog& log) {
  std::vector<std::array<double, 2>> out;
  out.reserve(log.steps.size());
  for (const StepRecord& r : log.steps) out.push_back({r.x, r.y});
  return out;
}

// true when the executed path ever comes within radius of a ground-truth
// obstacle position at the matching step index
inline bool episode_collided(const EpisodeLog& log, const Scene& scene, double radius) {
  if (!(radius > 0.0)) throw ConfigError("collision radius must be > 0");
  for (const StepRecord& r : log.steps) {
    for (std::size_t o = 0; o < scene.obstacles.size(); ++o) {
      const auto [ox, oy] = obstacle_position_at(scene, o, r.t);
      if (std::hypot(r.x - ox, r.y - oy) < radius) return true;
    }
  }
  return false;
}

inline double collision_rate(const std::vector<EpisodeLog>& logs, const std::vector<Scene>& scenes, double radius) {
  if (logs.size() != scenes.size()) throw DimensionError("collision rate: one scene per episode");
  if (logs.empty()) throw ConfigError("collision rate: no episodes");
  int hits = 0;
  for (std::size_t i = 0; i < logs.size(); ++i)
    if (episode_collided(logs[i], scenes[i], radius)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(logs.size());
}

inline double goal_error(const EpisodeLog& log) { return log.goal_error; }

namespace detail {

inline std::vector<std::array<double, 2>> velocities(const std::vector<std::array<double, 2>>& path, double dt) {
  std::vector<std::array<double, 2>> v;
  if (path.size() < 2) return v;
  v.reserve(path.size() - 1);
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    v.push_back({(path[i + 1][0] - path[i][0]) / dt, (path[i + 1][1] - path[i][1]) / dt});
  return v;
}

}  // namespace detail

// largest single-step velocity change along the path
inline double path_smoothness(const std::vector<std::array<double, 2>>& path, double dt) {
  if (!(dt > 0.0)) throw ConfigError("smoothness: dt must be > 0");
  if (path.size() < 3) throw DimensionError("smoothness needs at least 3 positions");
  const auto v = detail::velocities(path, dt);
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    worst = std::max(worst, std::hypot(v[i + 1][0] - v[i][0], v[i + 1][1] - v[i][1]));
  return worst;
}

// mean second difference of velocity, scaled to an acceleration rate
inline double path_jerk(const std::vector<std::array<double, 2>>& path, double dt) {
  if (!(dt > 0.0)) throw ConfigError("jerk: dt must be > 0");
  if (path.size() < 4) throw DimensionError("jerk needs at least 4 positions");
  const auto v = detail::velocities(path, dt);
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i + 2 < v.size(); ++i) {
    const double jx = (v[i + 2][0] - 2.0 * v[i + 1][0] + v[i][0]) / (dt * dt);
    const double jy = (v[i + 2][1] - 2.0 * v[i + 1][1] + v[i][1]) / (dt * dt);
    sum += std::hypot(jx, jy);
    ++n;
  }
  return sum / n;
}

struct EpisodeMetrics {
  int scene_id = 0;
  bool collision = false;
  double goal_error = 0.0;
  double smoothness = 0.0;
  double jerk = 0.0;
};

inline EpisodeMetrics episode_metrics(int scene_id, const EpisodeLog& log, const Scene& scene, double radius) {
  EpisodeMetrics m;
  m.scene_id = scene_id;
  m.collision = episode_collided(log, scene, radius);
  m.goal_error = log.goal_error;
  const auto path = executed_path(log);
  m.smoothness = path.size() >= 3 ? path_smoothness(path, scene.dt) : 0.0;
  m.jerk = path.size() >= 4 ? path_jerk(path, scene.dt) : 0.0;
  return m;
}

inline std::string metrics_csv_header() { return "scene_id,collision,goal_error,smoothness,jerk"; }

inline std::string metrics_csv_row(const EpisodeMetrics& m) {
  return std::to_string(m.scene_id) + "," + (m.collision ? "1" : "0") + "," + format_double(m.goal_error) + "," +
         format_double(m.smoothness) + "," + format_double(m.jerk);
}

// ---- latency ----

struct LatencySplit {
  double total_ms = 0.0;
  double gen_ms = 0.0;       // candidate generation / sampling
  double guidance_ms = 0.0;  // cost shaping on top of it
};

struct LatencyStats {
  int trials = 0;
  double median_ms = 0.0;
  double gen_ms = 0.0;
  double guidance_ms = 0.0;
  double hz = 0.0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Runs the probe trials times after 5 warmup calls and reports medians of the
// reported splits; hz is derived from the median total.
inline LatencyStats sampling_frequency(const std::function<LatencySplit()>& probe, int trials = 50) {
  if (trials < 10) throw ConfigError("latency: need at least 10 trials");
  for (int i = 0; i < 5; ++i) probe();
  std::vector<double> total, gen, guide;
  total.reserve(static_cast<std::size_t>(trials));
  gen.reserve(total.capacity());
  guide.reserve(total.capacity());
  for (int i = 0; i < trials; ++i) {
    const LatencySplit s = probe();
    total.push_back(s.total_ms);
    gen.push_back(s.gen_ms);
    guide.push_back(s.guidance_ms);
  }
  LatencyStats out;
  out.trials = trials;
  out.median_ms = detail::median_of(total);
  out.gen_ms = detail::median_of(gen);
  out.guidance_ms = detail::median_of(guide);
  if (!(out.median_ms > 0.0)) throw NumericError("latency: non-positive median");
  out.hz = 1000.0 / out.median_ms;
  return out;
}

inline std::string bench_csv_header() { return "planner,batch,median_ms,gen_ms,guidance_ms,hz"; }

inline std::string bench_csv_row(const std::string& planner, int batch, const LatencyStats& s) {
  return planner + "," + std::to_string(batch) + "," + format_double(s.median_ms) + "," + format_double(s.gen_ms) +
         "," + format_double(s.guidance_ms) + "," + format_double(s.hz);
}

}  // namespace imleplan
