// command-line front end: dataset generation, training, closed-loop planning,
// and the latency benchmark

#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "imleplan/imleplan.hpp"

namespace ip = imleplan;
using nlohmann::json;

namespace {

// ---- config file ----

json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ip::IoError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ip::ConfigError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ip::ConfigError("config must be a flat JSON object");
  return j;
}

void check_keys(const json& cfg, const std::set<std::string>& required, const std::set<std::string>& allowed) {
  for (const std::string& k : required)
    if (!cfg.contains(k)) throw ip::ConfigError("missing config key: " + k);
  for (const auto& item : cfg.items())
    if (!allowed.count(item.key())) throw ip::ConfigError("unknown config key: " + item.key());
}

int cfg_int(const json& cfg, const std::string& key) {
  const json& v = cfg.at(key);
  if (!v.is_number_integer()) throw ip::ConfigError("config key " + key + " must be an integer");
  return v.get<int>();
}

int cfg_int_or(const json& cfg, const std::string& key, int fallback) {
  return cfg.contains(key) ? cfg_int(cfg, key) : fallback;
}

double cfg_num(const json& cfg, const std::string& key) {
  const json& v = cfg.at(key);
  if (!v.is_number()) throw ip::ConfigError("config key " + key + " must be a number");
  return v.get<double>();
}

double cfg_num_or(const json& cfg, const std::string& key, double fallback) {
  return cfg.contains(key) ? cfg_num(cfg, key) : fallback;
}

std::string cfg_str(const json& cfg, const std::string& key) {
  const json& v = cfg.at(key);
  if (!v.is_string()) throw ip::ConfigError("config key " + key + " must be a string");
  return v.get<std::string>();
}

std::vector<int> cfg_int_list(const json& cfg, const std::string& key) {
  const json& v = cfg.at(key);
  if (!v.is_array() || v.empty()) throw ip::ConfigError("config key " + key + " must be a nonempty integer list");
  std::vector<int> out;
  for (const json& e : v) {
    if (!e.is_number_integer()) throw ip::ConfigError("config key " + key + " must hold integers");
    out.push_back(e.get<int>());
  }
  return out;
}

bool cfg_adam(const json& cfg) {
  const std::string opt = cfg.contains("optimizer") ? cfg_str(cfg, "optimizer") : "sgd";
  if (opt == "sgd") return false;
  if (opt == "adam") return true;
  throw ip::ConfigError("config key optimizer must be sgd or adam");
}

// ---- augmentation DSL: "t=dx:dy|dx:dy;r=rad|rad;w=odd" ----

ip::AugmentationSpec parse_augment(const std::string& text) {
  ip::AugmentationSpec spec;
  for (const std::string& part : ip::split(text, ';')) {
    if (part.empty()) continue;
    const std::size_t eq = part.find('=');
    if (eq == std::string::npos) throw ip::ConfigError("augment: expected key=value in '" + part + "'");
    const std::string key = part.substr(0, eq);
    const std::string val = part.substr(eq + 1);
    if (key == "t") {
      spec.translations.clear();
      for (const std::string& pair : ip::split(val, '|')) {
        const auto xy = ip::split(pair, ':');
        if (xy.size() != 2) throw ip::ConfigError("augment: translation must be dx:dy, got '" + pair + "'");
        spec.translations.push_back({ip::parse_double(xy[0], "augment translation"),
                                     ip::parse_double(xy[1], "augment translation")});
      }
    } else if (key == "r") {
      spec.rotations.clear();
      for (const std::string& ang : ip::split(val, '|'))
        spec.rotations.push_back(ip::parse_double(ang, "augment rotation"));
    } else if (key == "w") {
      spec.smoothing_window = static_cast<int>(ip::parse_long(val, "augment window"));
    } else {
      throw ip::ConfigError("augment: unknown section '" + key + "' (use t, r, w)");
    }
  }
  return spec;
}

// ---- scene files ----

std::vector<ip::Scene> load_scenes_json(const std::string& path, double default_dt) {
  std::ifstream in(path);
  if (!in) throw ip::IoError("cannot open scene file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw ip::IoError("scene file " + path + ": " + e.what());
  }
  const json* arr = nullptr;
  if (doc.is_array())
    arr = &doc;
  else if (doc.is_object() && doc.contains("scenes") && doc["scenes"].is_array())
    arr = &doc["scenes"];
  else
    throw ip::IoError("scene file must be a JSON array or {\"scenes\": [...]} ");
  std::vector<ip::Scene> out;
  for (const json& js : *arr) {
    ip::Scene s;
    const auto read_pair = [&](const char* key, std::array<double, 2>& dst) {
      if (!js.contains(key) || !js[key].is_array() || js[key].size() != 2)
        throw ip::IoError(std::string("scene needs numeric pair '") + key + "'");
      dst = {js[key][0].get<double>(), js[key][1].get<double>()};
    };
    read_pair("robot_start", s.robot_start);
    read_pair("goal", s.goal);
    s.duration = js.value("duration", 40);
    s.dt = js.value("dt", default_dt);
    if (js.contains("obstacles")) {
      for (const json& jo : js["obstacles"]) {
        ip::Obstacle o;
        o.px = jo.value("px", 0.0);
        o.py = jo.value("py", 0.0);
        o.vx = jo.value("vx", 0.0);
        o.vy = jo.value("vy", 0.0);
        s.obstacles.push_back(o);
      }
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ip::IoError("scene file holds no scenes");
  return out;
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

// ---- datagen ----

struct DatagenOpts {
  std::string kind, out, in, augment;
  int n = 200, horizon = 20;
  double dt = 0.4;
  std::uint64_t seed = 0;
};

void cmd_datagen(const DatagenOpts& o) {
  ip::Dataset ds;
  if (o.kind == "bimodal") {
    ds = ip::generate_bimodal_dataset(o.n, o.horizon, o.dt, o.seed);
  } else {
    if (o.in.empty()) throw ip::ConfigError("--kind raw requires --in <raw file>");
    ds = ip::load_raw_trajectories(o.in, o.horizon, o.dt);
  }
  ip::attach_navigation_returns(ds);
  if (!o.augment.empty()) {
    const ip::AugmentationSpec spec = parse_augment(o.augment);
    ds = ip::augment(ds, spec, [](const ip::Trajectory& t, const ip::Context& c) {
      return ip::navigation_reward(t, c);
    });
  }
  ip::save_dataset(ds, o.out);
  std::cerr << "samples=" << ds.samples.size() << "\n";
}

// ---- train ----

struct TrainOpts {
  std::string model, data, config, out;
};

const std::set<std::string> kOptimKeys = {"optimizer", "adam_beta1", "adam_beta2", "adam_eps"};

void train_imle_cmd(const TrainOpts& o, const json& cfg, const ip::Dataset& ds) {
  std::set<std::string> allowed = {"latent_dim", "hidden", "m",         "K",      "L",    "eta",
                                   "batch",      "minibatch", "weighting", "beta_w", "seed", "film_hidden",
                                   "scale"};
  allowed.insert(kOptimKeys.begin(), kOptimKeys.end());
  check_keys(cfg,
             {"latent_dim", "hidden", "m", "K", "L", "eta", "batch", "minibatch", "weighting", "beta_w", "seed"},
             allowed);

  ip::GeneratorDims dims;
  dims.latent_dim = cfg_int(cfg, "latent_dim");
  dims.state_dim = ds.state_dim;
  dims.action_dim = ds.action_dim;
  dims.goal_dim = ds.goal_dim;
  dims.obstacle_count = ds.obstacle_count;
  dims.history_len = ds.history_len;
  dims.horizon = ds.horizon;
  dims.dt = ds.dt;
  dims.hidden = cfg_int_list(cfg, "hidden");
  dims.film_hidden = cfg_int_or(cfg, "film_hidden", dims.film_hidden);
  dims.scale = cfg_num_or(cfg, "scale", dims.scale);
  ip::validate_generator_dims(dims);

  ip::TrainConfig tc;
  tc.m = cfg_int(cfg, "m");
  tc.epochs = cfg_int(cfg, "K");
  tc.inner_steps = cfg_int(cfg, "L");
  tc.eta = cfg_num(cfg, "eta");
  tc.batch = cfg_int(cfg, "batch");
  tc.minibatch = cfg_int(cfg, "minibatch");
  const std::string w = cfg_str(cfg, "weighting");
  if (w == "none")
    tc.weighting = ip::TrainConfig::Weighting::none;
  else if (w == "linear")
    tc.weighting = ip::TrainConfig::Weighting::linear;
  else if (w == "exp")
    tc.weighting = ip::TrainConfig::Weighting::exponential;
  else
    throw ip::ConfigError("config key weighting must be one of none|linear|exp");
  tc.beta_w = cfg_num(cfg, "beta_w");
  tc.seed = static_cast<std::uint64_t>(cfg_int(cfg, "seed"));
  tc.adam = cfg_adam(cfg);
  tc.adam_beta1 = cfg_num_or(cfg, "adam_beta1", tc.adam_beta1);
  tc.adam_beta2 = cfg_num_or(cfg, "adam_beta2", tc.adam_beta2);
  tc.adam_eps = cfg_num_or(cfg, "adam_eps", tc.adam_eps);
  ip::validate_train_config(tc);

  ip::Rng rng(tc.seed);
  ip::GeneratorParams params = ip::init_generator(dims, rng);
  ip::train_imle(params, ds, tc, [](const ip::EpochStats& s) {
    std::cerr << "epoch=" << s.epoch << " mean_selected_loss=" << ip::format_double(s.mean_selected_loss)
              << " wall_ms=" << ip::format_double(s.wall_ms) << "\n";
  });
  ip::save_checkpoint(params, o.out);
}

void train_ddpm_cmd(const TrainOpts& o, const json& cfg, const ip::Dataset& ds) {
  std::set<std::string> allowed = {"hidden",  "eta",     "minibatch",    "seed", "steps",
                                   "T",       "beta_lo", "beta_hi",      "time_emb_dim",
                                   "film_hidden", "scale", "log_every"};
  allowed.insert(kOptimKeys.begin(), kOptimKeys.end());
  check_keys(cfg, {"hidden", "eta", "minibatch", "seed", "steps", "T"}, allowed);

  ip::GeneratorDims dims;
  dims.latent_dim = 1;
  dims.state_dim = ds.state_dim;
  dims.action_dim = ds.action_dim;
  dims.goal_dim = ds.goal_dim;
  dims.obstacle_count = ds.obstacle_count;
  dims.history_len = ds.history_len;
  dims.horizon = ds.horizon;
  dims.dt = ds.dt;
  dims.hidden = cfg_int_list(cfg, "hidden");
  dims.film_hidden = cfg_int_or(cfg, "film_hidden", dims.film_hidden);
  dims.scale = cfg_num_or(cfg, "scale", dims.scale);

  const ip::NoiseSchedule sched =
      ip::make_linear_schedule(cfg_int(cfg, "T"), cfg_num_or(cfg, "beta_lo", 1e-4), cfg_num_or(cfg, "beta_hi", 2e-2));

  ip::DdpmTrainConfig tc;
  tc.steps = cfg_int(cfg, "steps");
  tc.minibatch = cfg_int(cfg, "minibatch");
  tc.eta = cfg_num(cfg, "eta");
  tc.seed = static_cast<std::uint64_t>(cfg_int(cfg, "seed"));
  tc.log_every = cfg_int_or(cfg, "log_every", tc.log_every);
  tc.adam = cfg_adam(cfg);
  tc.adam_beta1 = cfg_num_or(cfg, "adam_beta1", tc.adam_beta1);
  tc.adam_beta2 = cfg_num_or(cfg, "adam_beta2", tc.adam_beta2);
  tc.adam_eps = cfg_num_or(cfg, "adam_eps", tc.adam_eps);

  ip::Rng rng(tc.seed);
  ip::DenoiserParams params = ip::init_denoiser(dims, cfg_int_or(cfg, "time_emb_dim", 8), rng);
  ip::train_ddpm(params, sched, ds, tc, [](int step, double mean_loss, double wall_ms) {
    std::cerr << "step=" << step << " mean_loss=" << ip::format_double(mean_loss)
              << " wall_ms=" << ip::format_double(wall_ms) << "\n";
  });
  ip::save_ddpm_checkpoint(params, sched, o.out);
}

void cmd_train(const TrainOpts& o) {
  const json cfg = load_config_json(o.config);
  const ip::Dataset ds = ip::load_dataset(o.data);
  if (o.model == "imle")
    train_imle_cmd(o, cfg, ds);
  else
    train_ddpm_cmd(o, cfg, ds);
}

// ---- plan ----

struct PlanOpts {
  std::string ckpt, scenes, mode = "mppi", proposal = "imle", out;
  double radius = 0.5;
  double safety_radius = 0.5;
  std::uint64_t seed = 0;
  int jobs = 1;
  int candidates = 64;
  int horizon = 20;
  bool horizon_given = false;
  double dt = 0.4;
  bool dt_given = false;
  double goal_tol = 0.2;
  double lambda = 0.5;
  int perturbations = 32;
  double sigma = 0.1;
  double line_speed = 1.0;
  double gauss_sigma = 0.25;
};

void cmd_plan(const PlanOpts& o) {
  ip::PlannerSetup setup;
  if (o.proposal == "imle") {
    if (o.ckpt.empty()) throw ip::ConfigError("--proposal imle requires --ckpt");
    auto params = std::make_shared<ip::GeneratorParams>(ip::load_checkpoint(o.ckpt));
    if (o.horizon_given && params->dims.horizon != o.horizon)
      throw ip::DimensionError("checkpoint horizon does not match --horizon");
    if (o.dt_given && params->dims.dt != o.dt)
      throw ip::DimensionError("checkpoint dt does not match --dt");
    setup.horizon = params->dims.horizon;
    setup.dt = params->dims.dt;
    setup.source = ip::ImleSource{params};
  } else {
    setup.horizon = o.horizon;
    setup.dt = o.dt;
    if (o.proposal == "line")
      setup.source = ip::StraightLineSource{o.line_speed};
    else
      setup.source = ip::GaussianSource{o.gauss_sigma};
  }
  setup.mode = o.mode == "score_rank" ? ip::PlannerSetup::Mode::score_rank : ip::PlannerSetup::Mode::mppi;
  setup.candidates = o.candidates;
  setup.mppi.lambda = o.lambda;
  setup.mppi.perturbations = o.perturbations;
  setup.mppi.sigma = o.sigma;
  setup.cost.safety_radius = o.safety_radius;
  setup.goal_tolerance = o.goal_tol;

  std::vector<ip::Scene> scenes;
  if (all_digits(o.scenes))
    scenes = ip::make_crossing_scenes(static_cast<int>(ip::parse_long(o.scenes, "--scenes")), setup.dt, o.seed);
  else
    scenes = load_scenes_json(o.scenes, setup.dt);
  for (const ip::Scene& s : scenes)
    if (s.dt != setup.dt) throw ip::DimensionError("scene dt does not match the planner dt");

  if (o.jobs < 1) throw ip::ConfigError("--jobs must be >= 1");
  std::vector<ip::EpisodeLog> logs(scenes.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < scenes.size(); i = next.fetch_add(1)) {
      try {
        logs[i] = ip::receding_horizon_run(scenes[i], setup, o.seed + i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const int jobs = std::min<int>(o.jobs, static_cast<int>(scenes.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::error_code ec;
  std::filesystem::create_directories(o.out, ec);
  if (ec) throw ip::IoError("cannot create output directory: " + o.out);

  const std::string csv_path = o.out + "/metrics.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw ip::IoError("cannot write " + csv_path);
  csv << ip::metrics_csv_header() << "\n";
  int collisions = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const ip::EpisodeMetrics m = ip::episode_metrics(static_cast<int>(i), logs[i], scenes[i], o.radius);
    collisions += m.collision ? 1 : 0;
    csv << ip::metrics_csv_row(m) << "\n";

    const std::string log_path = o.out + "/episode_" + std::to_string(i) + ".log";
    std::ofstream lf(log_path);
    if (!lf) throw ip::IoError("cannot write " + log_path);
    for (const ip::StepRecord& r : logs[i].steps) lf << ip::format_step_line(r) << "\n";
    const json summary = {{"scene_id", static_cast<int>(i)},
                          {"steps", static_cast<int>(logs[i].steps.size())},
                          {"reached_goal", logs[i].reached_goal},
                          {"aborted", logs[i].aborted},
                          {"abort_reason", logs[i].abort_reason},
                          {"collision", m.collision},
                          {"goal_error", m.goal_error},
                          {"smoothness", m.smoothness},
                          {"jerk", m.jerk}};
    lf << summary.dump() << "\n";
  }
  std::cerr << "episodes=" << scenes.size() << " collision_rate="
            << ip::format_double(static_cast<double>(collisions) / static_cast<double>(scenes.size())) << "\n";
}

// ---- bench ----

struct BenchOpts {
  std::string ckpt_imle, ckpt_ddpm, out;
  int batch = 64;
  int trials = 50;
  double guidance_gain = 1.0;
};

struct BenchRig {
  ip::Scene scene;
  ip::Context ctx;
  ip::Forecast forecast;
  ip::CostConfig cost;
};

BenchRig make_rig(const ip::GeneratorDims& dims) {
  BenchRig rig;
  rig.scene = ip::make_crossing_scenes(1, dims.dt, 7)[0];
  ip::ObstacleTracker tracker;
  tracker.reset(rig.scene.obstacles, std::max(1, dims.history_len), rig.scene.dt);
  rig.ctx = ip::make_context(rig.scene.robot_start, rig.scene.goal, rig.scene.obstacles, tracker,
                             dims.obstacle_count, dims.history_len);
  rig.forecast = ip::constant_velocity_forecast(rig.scene, dims.horizon);
  return rig;
}

void cmd_bench(const BenchOpts& o) {
  auto now = [] { return std::chrono::steady_clock::now(); };
  auto ms = [](auto a, auto b) { return std::chrono::duration<double, std::milli>(b - a).count(); };

  auto imle_params = std::make_shared<ip::GeneratorParams>(ip::load_checkpoint(o.ckpt_imle));
  const BenchRig imle_rig = make_rig(imle_params->dims);
  ip::Rng imle_rng(11);
  const ip::ProposalSource imle_src = ip::ImleSource{imle_params};
  auto imle_probe = [&]() {
    ip::LatencySplit s;
    const auto t0 = now();
    const std::vector<ip::Trajectory> cands = ip::sample_candidates(
        imle_src, imle_rig.ctx, o.batch, imle_params->dims.horizon, imle_params->dims.dt, imle_rng);
    const auto t1 = now();
    ip::score_rank_select(cands, [&](const ip::Trajectory& tr) {
      return -ip::total_cost(tr, imle_rig.forecast, imle_rig.scene.goal[0], imle_rig.scene.goal[1], imle_rig.cost)
                  .total;
    });
    const auto t2 = now();
    s.gen_ms = ms(t0, t1);
    s.guidance_ms = ms(t1, t2);
    s.total_ms = ms(t0, t2);
    return s;
  };
  const ip::LatencyStats imle_stats = ip::sampling_frequency(imle_probe, o.trials);

  auto [ddpm_params, sched] = ip::load_ddpm_checkpoint(o.ckpt_ddpm);
  const BenchRig ddpm_rig = make_rig(ddpm_params.dims);
  ip::Rng ddpm_rng(13);
  double guide_acc = 0.0;
  const ip::GuidanceFn guide = [&](const ip::Trajectory& tr) {
    const auto g0 = now();
    std::vector<double> g = ip::cost_gradient(tr, ddpm_rig.forecast, ddpm_rig.scene.goal[0], ddpm_rig.scene.goal[1],
                                              ddpm_rig.cost);
    for (double& v : g) v = -v;  // reward ascent
    guide_acc += ms(g0, now());
    return g;
  };
  auto ddpm_probe = [&]() {
    guide_acc = 0.0;
    const auto t0 = now();
    for (int b = 0; b < o.batch; ++b)
      ip::reverse_sample(ddpm_params, sched, ddpm_rig.ctx, ddpm_rng, guide, o.guidance_gain);
    const auto t1 = now();
    ip::LatencySplit s;
    s.total_ms = ms(t0, t1);
    s.guidance_ms = guide_acc;
    s.gen_ms = s.total_ms - guide_acc;
    return s;
  };
  const ip::LatencyStats ddpm_stats = ip::sampling_frequency(ddpm_probe, o.trials);

  std::ofstream csv(o.out);
  if (!csv) throw ip::IoError("cannot write " + o.out);
  csv << ip::bench_csv_header() << "\n";
  csv << ip::bench_csv_row("imle", o.batch, imle_stats) << "\n";
  csv << ip::bench_csv_row("ddpm", o.batch, ddpm_stats) << "\n";
  std::cerr << "imle_hz=" << ip::format_double(imle_stats.hz) << " ddpm_hz=" << ip::format_double(ddpm_stats.hz)
            << " ratio=" << ip::format_double(imle_stats.hz / ddpm_stats.hz) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory-generator planning toolkit"};
  app.require_subcommand(1);

  DatagenOpts dg;
  CLI::App* datagen = app.add_subcommand("datagen", "write a trajectory dataset");
  datagen->add_option("--kind", dg.kind, "bimodal|raw")->required()->check(CLI::IsMember({"bimodal", "raw"}));
  datagen->add_option("--out", dg.out, "output dataset path")->required();
  datagen->add_option("--in", dg.in, "raw trace file (frame agent x y) for --kind raw");
  datagen->add_option("--n", dg.n, "sample count for --kind bimodal");
  datagen->add_option("--horizon", dg.horizon, "steps per trajectory");
  datagen->add_option("--dt", dg.dt, "step length, seconds");
  datagen->add_option("--seed", dg.seed, "rng seed");
  datagen->add_option("--augment", dg.augment, "augmentation spec, e.g. t=0:0|1:0;r=0.1|-0.1;w=3");

  TrainOpts tr;
  CLI::App* train = app.add_subcommand("train", "train a model on a dataset");
  train->add_option("--model", tr.model, "imle|ddpm")->required()->check(CLI::IsMember({"imle", "ddpm"}));
  train->add_option("--data", tr.data, "dataset path")->required();
  train->add_option("--config", tr.config, "JSON hyperparameter file")->required();
  train->add_option("--out", tr.out, "checkpoint output path")->required();

  PlanOpts pl;
  CLI::App* plan = app.add_subcommand("plan", "closed-loop evaluation over scenes");
  plan->add_option("--ckpt", pl.ckpt, "generator checkpoint (needed for --proposal imle)");
  plan->add_option("--scenes", pl.scenes, "scene count (synthetic crossings) or JSON scene file")->required();
  plan->add_option("--mode", pl.mode, "score_rank|mppi")->check(CLI::IsMember({"score_rank", "mppi"}));
  plan->add_option("--proposal", pl.proposal, "imle|line|gauss")->check(CLI::IsMember({"imle", "line", "gauss"}));
  plan->add_option("--radius", pl.radius, "collision-check radius, meters");
  plan->add_option("--safety-radius", pl.safety_radius, "barrier safety radius, meters");
  plan->add_option("--out", pl.out, "output directory")->required();
  plan->add_option("--seed", pl.seed, "rng seed");
  plan->add_option("--jobs", pl.jobs, "parallel scene workers");
  plan->add_option("--candidates", pl.candidates, "proposals per replan");
  CLI::Option* horizon_opt = plan->add_option("--horizon", pl.horizon, "plan length, steps");
  CLI::Option* dt_opt = plan->add_option("--dt", pl.dt, "step length, seconds");
  plan->add_option("--goal-tol", pl.goal_tol, "goal tolerance, meters");
  plan->add_option("--lambda", pl.lambda, "mppi temperature");
  plan->add_option("--perturbations", pl.perturbations, "mppi perturbation count");
  plan->add_option("--sigma", pl.sigma, "mppi perturbation sigma");
  plan->add_option("--line-speed", pl.line_speed, "straight-line proposal speed");
  plan->add_option("--gauss-sigma", pl.gauss_sigma, "gaussian proposal sigma");

  BenchOpts be;
  CLI::App* bench = app.add_subcommand("bench", "per-plan latency benchmark");
  bench->add_option("--ckpt-imle", be.ckpt_imle, "generator checkpoint")->required();
  bench->add_option("--ckpt-ddpm", be.ckpt_ddpm, "denoiser checkpoint")->required();
  bench->add_option("--batch", be.batch, "candidates per plan");
  bench->add_option("--trials", be.trials, "timed trials (>= 10)");
  bench->add_option("--out", be.out, "output CSV path")->required();
  bench->add_option("--guidance-gain", be.guidance_gain, "reverse-sampling guidance gain");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    pl.horizon_given = horizon_opt->count() > 0;
    pl.dt_given = dt_opt->count() > 0;
    if (datagen->parsed()) cmd_datagen(dg);
    if (train->parsed()) cmd_train(tr);
    if (plan->parsed()) cmd_plan(pl);
    if (bench->parsed()) cmd_bench(be);
  } catch (const ip::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ip::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ip::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ip::DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ip::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
