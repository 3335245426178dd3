#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "imleplan/generator.hpp"
#include "imleplan/trajectory.hpp"

namespace imleplan {

struct LatentPool {
  int latent_dim = 0;
  std::vector<Eigen::VectorXd> z;
  int size() const { return static_cast<int>(z.size()); }
};

inline LatentPool sample_latent_pool(int m, int latent_dim, Rng& rng) {
  if (m < 1) throw ConfigError("latent pool needs m >= 1");
  if (latent_dim < 1) throw DimensionError("latent pool needs latent_dim >= 1");
  LatentPool pool;
  pool.latent_dim = latent_dim;
  pool.z.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd z(latent_dim);
    for (int d = 0; d < latent_dim; ++d) z[d] = rng.gaussian();
    pool.z.push_back(std::move(z));
  }
  return pool;
}

struct NearestLatent {
  int index = -1;
  double loss = 0.0;  // squared trajectory distance of the winner
};

inline NearestLatent nearest_latent(const GeneratorParams& params, const LatentPool& pool,
                                    const WeightedSample& sample) {
  if (pool.size() < 1) throw ConfigError("latent pool is empty");
  if (sample.trajectory.values.size() != static_cast<std::size_t>(params.dims.output_dim()))
    throw DimensionError("nearest latent: sample does not match generator shape");
  NearestLatent best;
  for (int j = 0; j < pool.size(); ++j) {
    const Trajectory gen = generator_forward(params, pool.z[static_cast<std::size_t>(j)], sample.context);
    // plain squared distance: overflow from an exploding generator must come
    // back as inf so the epoch-level divergence guard reports it, not as a
    // shape error out of the distance helper
    double loss = 0.0;
    for (std::size_t i = 0; i < gen.values.size(); ++i) {
      const double d = gen.values[i] - sample.trajectory.values[i];
      loss += d * d;
    }
    if (best.index < 0 || loss < best.loss) {
      best.index = j;
      best.loss = loss;
    }
  }
  return best;
}

// w_i = exp((r_i - median) / (beta_w * MAD)), MAD clamped below at 1e-8
inline std::vector<double> exponential_weights(const std::vector<double>& returns, double beta_w) {
  if (returns.empty()) throw ConfigError("weights need at least one return");
  if (!(beta_w > 0.0)) throw ConfigError("beta_w must be > 0");
  for (double r : returns)
    if (!std::isfinite(r)) throw NumericError("returns must be finite");
  std::vector<double> sorted = returns;
  auto median_of = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double med = median_of(sorted);
  std::vector<double> dev(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) dev[i] = std::abs(returns[i] - med);
  double mad = median_of(dev);
  if (mad < 1e-8) mad = 1e-8;
  std::vector<double> w(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) w[i] = std::exp((returns[i] - med) / (beta_w * mad));
  return w;
}

// w_i = (r_i - min) / (max - min); all weights 1 when the spread is zero
inline std::vector<double> linear_weights(const std::vector<double>& returns) {
  if (returns.empty()) throw ConfigError("weights need at least one return");
  for (double r : returns)
    if (!std::isfinite(r)) throw NumericError("returns must be finite");
  const auto [lo_it, hi_it] = std::minmax_element(returns.begin(), returns.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> w(returns.size(), 1.0);
  if (hi > lo)
    for (std::size_t i = 0; i < returns.size(); ++i) w[i] = (returns[i] - lo) / (hi - lo);
  return w;
}

// Sum of weighted squared reconstruction errors for chosen latent codes.
// batch objective; pass dataset_size/batch_size as scale to get the full
// stochastic estimate
inline double weighted_imle_loss(const GeneratorParams& params, const std::vector<Eigen::VectorXd>& latents,
                                 const std::vector<const WeightedSample*>& samples,
                                 const std::vector<double>& weights, double scale = 1.0) {
  if (latents.size() != samples.size() || latents.size() != weights.size())
    throw DimensionError("weighted loss: mismatched list lengths");
  double acc = 0.0;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const Trajectory gen = generator_forward(params, latents[i], samples[i]->context);
    const double d = trajectory_distance(gen, samples[i]->trajectory);
    acc += weights[i] * d * d;
  }
  return scale * acc;
}

struct TrainConfig {
  int m = 10;           // latent pool size per sample
  int epochs = 200;     // outer iterations (pool refresh + selection)
  int inner_steps = 4;  // gradient steps per epoch
  double eta = 1e-4;
  int batch = 64;       // samples re-selected per epoch
  int minibatch = 32;   // samples per gradient step
  enum class Weighting { none, linear, exponential } weighting = Weighting::none;
  double beta_w = 0.5;
  std::uint64_t seed = 0;
  bool adam = false;  // optional adaptive-moment mode; plain SGD when false
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
};

inline void validate_train_config(const TrainConfig& cfg) {
  if (cfg.m < 1) throw ConfigError("train: m must be >= 1");
  if (cfg.epochs < 1 || cfg.inner_steps < 1) throw ConfigError("train: epochs and inner_steps must be >= 1");
  if (!(cfg.eta > 0.0)) throw ConfigError("train: eta must be > 0");
  if (cfg.batch < 1 || cfg.minibatch < 1) throw ConfigError("train: batch and minibatch must be >= 1");
  if (!(cfg.beta_w > 0.0)) throw ConfigError("train: beta_w must be > 0");
}

struct EpochStats {
  int epoch = 0;
  double mean_selected_loss = 0.0;
  double wall_ms = 0.0;
};

using EpochReporter = std::function<void(const EpochStats&)>;

inline std::vector<double> training_weights(const Dataset& ds, const TrainConfig& cfg) {
  std::vector<double> returns(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) returns[i] = ds.samples[i].return_value;
  switch (cfg.weighting) {
    case TrainConfig::Weighting::linear:
      return linear_weights(returns);
    case TrainConfig::Weighting::exponential:
      return exponential_weights(returns, cfg.beta_w);
    case TrainConfig::Weighting::none:
    default:
      return std::vector<double>(ds.samples.size(), 1.0);
  }
}

// Reward-weighted IMLE fit. Per epoch: draw a batch, give every batch sample a
// fresh latent pool and keep its best code, then take inner_steps SGD steps on
// minibatches of the batch, each scaled by N / |minibatch|.
inline std::vector<EpochStats> train_imle(GeneratorParams& params, const Dataset& ds, const TrainConfig& cfg,
                                          const EpochReporter& report = {}) {
  validate_train_config(cfg);
  if (ds.samples.empty()) throw ConfigError("train: dataset is empty");
  validate_dataset(ds);
  if (ds.horizon != params.dims.horizon || ds.state_dim != params.dims.state_dim ||
      ds.action_dim != params.dims.action_dim || ds.dt != params.dims.dt)
    throw DimensionError("train: dataset dims do not match generator");

  const int N = static_cast<int>(ds.samples.size());
  const std::vector<double> w = training_weights(ds, cfg);
  Rng rng(cfg.seed);
  std::vector<Eigen::VectorXd> selected(static_cast<std::size_t>(N));
  FilmMlp grads = zeros_like(params.net);
  AdamState adam = make_adam_state(params.net);
  std::vector<EpochStats> history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto tic = std::chrono::steady_clock::now();
    const std::vector<int> batch = rng.pick(N, std::min(cfg.batch, N));

    double loss_acc = 0.0;
    for (int i : batch) {
      const LatentPool pool = sample_latent_pool(cfg.m, params.dims.latent_dim, rng);
      const NearestLatent best = nearest_latent(params, pool, ds.samples[static_cast<std::size_t>(i)]);
      selected[static_cast<std::size_t>(i)] = pool.z[static_cast<std::size_t>(best.index)];
      loss_acc += best.loss;
    }
    const double mean_selected = loss_acc / static_cast<double>(batch.size());
    if (!std::isfinite(mean_selected))
      throw DivergenceError("train: non-finite selected loss at epoch " + std::to_string(epoch));

    for (int l = 0; l < cfg.inner_steps; ++l) {
      const int mb = std::min<int>(cfg.minibatch, static_cast<int>(batch.size()));
      const std::vector<int> pickidx = rng.pick(static_cast<int>(batch.size()), mb);
      scale_params(grads, 0.0);
      for (int j : pickidx) {
        const int i = batch[static_cast<std::size_t>(j)];
        const WeightedSample& s = ds.samples[static_cast<std::size_t>(i)];
        FilmMlpTrace trace;
        const Trajectory gen = generator_forward(params, selected[static_cast<std::size_t>(i)], s.context, &trace);
        std::vector<double> upstream(gen.values.size());
        for (std::size_t e = 0; e < gen.values.size(); ++e)
          upstream[e] = 2.0 * w[static_cast<std::size_t>(i)] * (gen.values[e] - s.trajectory.values[e]);
        generator_backward(params, trace, upstream, grads);
      }
      const double scale = static_cast<double>(N) / static_cast<double>(mb);
      if (cfg.adam) {
        scale_params(grads, scale);
        adam_update(params.net, grads, adam, cfg.eta, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
      } else {
        axpy_params(params.net, -cfg.eta * scale, grads);
      }
    }
    if (!params_finite(params.net))
      throw DivergenceError("train: parameters became non-finite at epoch " + std::to_string(epoch));

    const auto toc = std::chrono::steady_clock::now();
    EpochStats st;
    st.epoch = epoch;
    st.mean_selected_loss = mean_selected;
    st.wall_ms = std::chrono::duration<double, std::milli>(toc - tic).count();
    history.push_back(st);
    if (report) report(st);
  }
  return history;
}

}  // namespace imleplan
