#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <string>

#include "imleplan/generator.hpp"
#include "imleplan/trajectory.hpp"

namespace imleplan {

struct NoiseSchedule {
  int steps = 0;                  // T
  std::vector<double> beta;       // beta_1..beta_T at [0..T-1]
  std::vector<double> alpha_bar;  // cumulative products of (1 - beta)
};

inline NoiseSchedule make_linear_schedule(int steps, double beta_min = 1e-4, double beta_max = 2e-2) {
  if (steps < 1) throw ConfigError("noise schedule needs steps >= 1");
  if (!(beta_min > 0.0) || !(beta_max < 1.0) || beta_min > beta_max)
    throw ConfigError("noise schedule needs 0 < beta_min <= beta_max < 1");
  NoiseSchedule s;
  s.steps = steps;
  s.beta.resize(static_cast<std::size_t>(steps));
  s.alpha_bar.resize(static_cast<std::size_t>(steps));
  double prod = 1.0;
  for (int t = 0; t < steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(steps - 1);
    s.beta[static_cast<std::size_t>(t)] = beta_min + (beta_max - beta_min) * frac;
    prod *= 1.0 - s.beta[static_cast<std::size_t>(t)];
    s.alpha_bar[static_cast<std::size_t>(t)] = prod;
  }
  return s;
}

inline void validate_schedule(const NoiseSchedule& s) {
  if (s.steps < 1 || s.beta.size() != static_cast<std::size_t>(s.steps) ||
      s.alpha_bar.size() != static_cast<std::size_t>(s.steps))
    throw ConfigError("noise schedule shape is inconsistent");
  double prev = 1.0;
  for (int t = 0; t < s.steps; ++t) {
    const double b = s.beta[static_cast<std::size_t>(t)];
    const double a = s.alpha_bar[static_cast<std::size_t>(t)];
    if (!(b > 0.0) || !(b < 1.0)) throw ConfigError("noise schedule betas must lie in (0, 1)");
    if (!(a > 0.0) || !(a < 1.0) || !(a < prev)) throw ConfigError("alpha_bar must strictly decrease within (0, 1)");
    prev = a;
  }
}

// closed-form jump to step t: sqrt(abar) x0 + sqrt(1 - abar) eps
inline Eigen::VectorXd forward_noise(const Eigen::VectorXd& x0, int t, const Eigen::VectorXd& eps,
                                     const NoiseSchedule& sched) {
  if (t < 1 || t > sched.steps) throw DimensionError("forward_noise: step out of range");
  if (x0.size() != eps.size()) throw DimensionError("forward_noise: shape mismatch");
  const double ab = sched.alpha_bar[static_cast<std::size_t>(t - 1)];
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

inline Eigen::VectorXd time_embedding(int t, int dim) {
  if (dim < 2 || dim % 2 != 0) throw DimensionError("time embedding dim must be even and >= 2");
  Eigen::VectorXd emb(dim);
  for (int i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / static_cast<double>(dim));
    emb[2 * i] = std::sin(t * freq);
    emb[2 * i + 1] = std::cos(t * freq);
  }
  return emb;
}

// Noise predictor: same FiLM trunk family as the generator, fed the flattened
// noisy trajectory plus a sinusoidal step embedding. latent_dim is unused.
struct DenoiserParams {
  GeneratorDims dims;
  int time_emb_dim = 8;
  FilmMlp net;
};

inline DenoiserParams init_denoiser(GeneratorDims dims, int time_emb_dim, Rng& rng) {
  dims.latent_dim = 1;
  validate_generator_dims(dims);
  if (time_emb_dim < 2 || time_emb_dim % 2 != 0) throw DimensionError("time embedding dim must be even and >= 2");
  FilmMlpDims nd;
  nd.input_dim = dims.output_dim() + time_emb_dim;
  nd.cond_dim = dims.context_dim();
  nd.hidden = dims.hidden;
  nd.film_hidden = dims.film_hidden;
  nd.output_dim = dims.output_dim();
  return {dims, time_emb_dim, init_film_mlp(nd, rng)};
}

// trajectory <-> normalized flat vector, same frame convention as the generator
inline Eigen::VectorXd normalize_trajectory(const Trajectory& traj, const Context& c, const GeneratorDims& dims) {
  if (traj.horizon != dims.horizon || traj.state_dim != dims.state_dim || traj.action_dim != dims.action_dim)
    throw DimensionError("trajectory dims do not match model");
  const int ch = dims.out_channels();
  Eigen::VectorXd out(dims.output_dim());
  for (int t = 0; t < dims.horizon; ++t)
    for (int j = 0; j < ch; ++j) {
      const double anchor = j < dims.state_dim ? c.current_state[static_cast<std::size_t>(j)] : 0.0;
      out[t * ch + j] = (traj.at(t, j) - anchor) / dims.scale;
    }
  return out;
}

inline Trajectory denormalize_trajectory(const Eigen::VectorXd& flat, const Context& c, const GeneratorDims& dims) {
  Trajectory out = make_trajectory(dims.horizon, dims.state_dim, dims.action_dim, dims.dt);
  const int ch = dims.out_channels();
  for (int t = 0; t < dims.horizon; ++t)
    for (int j = 0; j < ch; ++j) {
      const double anchor = j < dims.state_dim ? c.current_state[static_cast<std::size_t>(j)] : 0.0;
      out.at(t, j) = anchor + dims.scale * flat[t * ch + j];
    }
  for (int j = 0; j < dims.state_dim; ++j) out.at(0, j) = c.current_state[static_cast<std::size_t>(j)];
  return out;
}

inline Eigen::VectorXd denoiser_forward(const DenoiserParams& params, const Eigen::VectorXd& x_t, int t,
                                        const Context& c, FilmMlpTrace* trace = nullptr) {
  if (x_t.size() != params.dims.output_dim()) throw DimensionError("denoiser input size mismatch");
  Eigen::VectorXd input(x_t.size() + params.time_emb_dim);
  input.head(x_t.size()) = x_t;
  input.tail(params.time_emb_dim) = time_embedding(t, params.time_emb_dim);
  return film_mlp_forward(params.net, input, normalize_context(c, params.dims), trace);
}

// squared error of the noise prediction at one sampled step
inline double ddpm_loss(const DenoiserParams& params, const NoiseSchedule& sched, const WeightedSample& sample,
                        int t, const Eigen::VectorXd& eps) {
  const Eigen::VectorXd x0 = normalize_trajectory(sample.trajectory, sample.context, params.dims);
  const Eigen::VectorXd x_t = forward_noise(x0, t, eps, sched);
  const Eigen::VectorXd pred = denoiser_forward(params, x_t, t, sample.context);
  return (eps - pred).squaredNorm();
}

using GuidanceFn = std::function<std::vector<double>(const Trajectory&)>;  // d reward / d trajectory

// Ancestral sampling with sigma_t^2 = beta_t, fresh noise except at the last
// step, hard first-state conditioning every step, and optional reward-gradient
// guidance added to the posterior mean.
inline Trajectory reverse_sample(const DenoiserParams& params, const NoiseSchedule& sched, const Context& c,
                                 Rng& rng, const GuidanceFn& guidance = {}, double guidance_gain = 1.0) {
  validate_schedule(sched);
  const GeneratorDims& dims = params.dims;
  const int n = dims.output_dim();
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.gaussian();
  for (int j = 0; j < dims.state_dim; ++j) x[j] = 0.0;  // normalized current state

  for (int t = sched.steps; t >= 1; --t) {
    const double beta = sched.beta[static_cast<std::size_t>(t - 1)];
    const double ab = sched.alpha_bar[static_cast<std::size_t>(t - 1)];
    const Eigen::VectorXd pred = denoiser_forward(params, x, t, c);
    Eigen::VectorXd mean = (x - (beta / std::sqrt(1.0 - ab)) * pred) / std::sqrt(1.0 - beta);
    if (guidance) {
      const std::vector<double> g = guidance(denormalize_trajectory(x, c, dims));
      if (static_cast<int>(g.size()) != n) throw DimensionError("guidance gradient size mismatch");
      for (int i = 0; i < n; ++i) mean[i] += guidance_gain * dims.scale * g[static_cast<std::size_t>(i)];
    }
    if (t > 1) {
      const double sigma = std::sqrt(beta);
      for (int i = 0; i < n; ++i) mean[i] += sigma * rng.gaussian();
    }
    x = mean;
    for (int j = 0; j < dims.state_dim; ++j) x[j] = 0.0;
  }
  return denormalize_trajectory(x, c, dims);
}

struct DdpmTrainConfig {
  int steps = 2000;  // total gradient steps
  int minibatch = 32;
  double eta = 1e-3;
  std::uint64_t seed = 0;
  int log_every = 100;
  bool adam = false;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
};

inline void validate_ddpm_train_config(const DdpmTrainConfig& cfg) {
  if (cfg.steps < 0) throw ConfigError("ddpm train: steps must be >= 0");
  if (cfg.minibatch < 1) throw ConfigError("ddpm train: minibatch must be >= 1");
  if (!(cfg.eta > 0.0)) throw ConfigError("ddpm train: eta must be > 0");
  if (cfg.log_every < 1) throw ConfigError("ddpm train: log_every must be >= 1");
}

inline std::vector<std::pair<int, double>> train_ddpm(DenoiserParams& params, const NoiseSchedule& sched,
                                                      const Dataset& ds, const DdpmTrainConfig& cfg,
                                                      const std::function<void(int, double, double)>& report = {}) {
  validate_ddpm_train_config(cfg);
  validate_schedule(sched);
  if (ds.samples.empty()) throw ConfigError("ddpm train: dataset is empty");
  if (ds.horizon != params.dims.horizon || ds.state_dim != params.dims.state_dim ||
      ds.action_dim != params.dims.action_dim || ds.dt != params.dims.dt)
    throw DimensionError("ddpm train: dataset dims do not match denoiser");

  const int N = static_cast<int>(ds.samples.size());
  const int n = params.dims.output_dim();
  Rng rng(cfg.seed);
  FilmMlp grads = zeros_like(params.net);
  AdamState adam = make_adam_state(params.net);
  std::vector<std::pair<int, double>> history;
  double window_acc = 0.0;
  int window_count = 0;
  auto window_tic = std::chrono::steady_clock::now();

  for (int step = 1; step <= cfg.steps; ++step) {
    const int mb = std::min(cfg.minibatch, N);
    const std::vector<int> batch = rng.pick(N, mb);
    scale_params(grads, 0.0);
    double loss_acc = 0.0;
    for (int i : batch) {
      const WeightedSample& s = ds.samples[static_cast<std::size_t>(i)];
      const int t = 1 + static_cast<int>(rng.integer(static_cast<std::uint64_t>(sched.steps)));
      Eigen::VectorXd eps(n);
      for (int e = 0; e < n; ++e) eps[e] = rng.gaussian();
      const Eigen::VectorXd x0 = normalize_trajectory(s.trajectory, s.context, params.dims);
      const Eigen::VectorXd x_t = forward_noise(x0, t, eps, sched);
      FilmMlpTrace trace;
      const Eigen::VectorXd pred = denoiser_forward(params, x_t, t, s.context, &trace);
      loss_acc += (eps - pred).squaredNorm();
      const Eigen::VectorXd upstream = 2.0 / mb * (pred - eps);
      film_mlp_backward(params.net, trace, upstream, grads);
    }
    if (!std::isfinite(loss_acc)) throw DivergenceError("ddpm train: non-finite loss at step " + std::to_string(step));
    if (cfg.adam)
      adam_update(params.net, grads, adam, cfg.eta, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    else
      axpy_params(params.net, -cfg.eta, grads);

    window_acc += loss_acc / mb;
    ++window_count;
    if (step % cfg.log_every == 0 || step == cfg.steps) {
      const auto now = std::chrono::steady_clock::now();
      const double wall = std::chrono::duration<double, std::milli>(now - window_tic).count();
      const double mean_loss = window_acc / window_count;
      history.emplace_back(step, mean_loss);
      if (report) report(step, mean_loss, wall);
      window_acc = 0.0;
      window_count = 0;
      window_tic = now;
    }
  }
  if (!params_finite(params.net)) throw DivergenceError("ddpm train: parameters became non-finite");
  return history;
}

// ---- checkpoints ----

inline void save_ddpm_checkpoint(const DenoiserParams& params, const NoiseSchedule& sched, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << "DDPM-CKPT v1 " << detail::dims_header_tokens(params.dims) << " temb=" << params.time_emb_dim
    << " T=" << sched.steps << " beta_lo=" << format_double(sched.beta.front())
    << " beta_hi=" << format_double(sched.beta.back()) << "\n";
  detail::write_payload(f, const_cast<FilmMlp&>(params.net));
  f.flush();
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline std::pair<DenoiserParams, NoiseSchedule> load_ddpm_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::string header;
  if (!std::getline(f, header)) throw IoError(path + ": empty checkpoint");
  auto toks = split_ws(header);
  if (toks.size() < 2 || toks[0] != "DDPM-CKPT" || toks[1] != "v1")
    throw IoError(path + ": not a DDPM-CKPT v1 file");
  GeneratorDims dims = detail::parse_dims_tokens(toks, 2, path);
  const std::size_t at = 13;
  if (toks.size() < at + 4) throw IoError(path + ": checkpoint header is missing schedule tokens");
  const int temb = static_cast<int>(parse_long(expect_kv(toks[at], "temb", path), path));
  const int T = static_cast<int>(parse_long(expect_kv(toks[at + 1], "T", path), path));
  const double blo = parse_double(expect_kv(toks[at + 2], "beta_lo", path), path);
  const double bhi = parse_double(expect_kv(toks[at + 3], "beta_hi", path), path);
  Rng scratch(0);
  DenoiserParams params = init_denoiser(dims, temb, scratch);
  detail::read_payload(f, params.net, path);
  return {std::move(params), make_linear_schedule(T, blo, bhi)};
}

}  // namespace imleplan
