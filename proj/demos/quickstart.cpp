// end-to-end walkthrough: make demonstrations, train a sampler, plan one scene

#include <iostream>

#include "imleplan/imleplan.hpp"

int main() {
  using namespace imleplan;

  // 64 two-mode corridor demos, then one training sample per start offset so
  // the sampler sees mid-route and near-goal contexts too
  Dataset demos = generate_bimodal_dataset(64, 20, 0.4, 1);
  Dataset ds = expand_goal_suffixes(demos);
  std::cout << "dataset: " << demos.samples.size() << " demos -> " << ds.samples.size()
            << " windows, horizon " << ds.horizon << "\n";

  GeneratorDims dims;
  dims.latent_dim = 8;
  dims.hidden = {32, 32};
  dims.obstacle_count = 0;  // conditioning is goal-only; the planner costs handle obstacles
  dims.history_len = 0;
  dims.horizon = ds.horizon;
  dims.dt = ds.dt;
  Rng rng(1);
  GeneratorParams params = init_generator(dims, rng);

  TrainConfig tc;
  tc.m = 10;
  tc.epochs = 2000;
  tc.inner_steps = 4;
  tc.eta = 2e-6;
  tc.batch = 64;
  tc.minibatch = 32;
  tc.seed = 1;
  const auto history = train_imle(params, ds, tc);
  std::cout << "training: loss " << history.front().mean_selected_loss << " -> "
            << history.back().mean_selected_loss << " over " << history.size() << " epochs\n";

  const Scene scene = make_crossing_scenes(1, dims.dt, 3)[0];
  PlannerSetup setup;
  setup.source = ImleSource{std::make_shared<GeneratorParams>(params)};
  setup.mode = PlannerSetup::Mode::mppi;
  setup.horizon = dims.horizon;
  setup.dt = dims.dt;
  const EpisodeLog log = receding_horizon_run(scene, setup, 5);
  std::cout << "episode: " << log.steps.size() << " steps, goal error " << log.goal_error
            << (log.reached_goal ? " (reached)" : "") << "\n";
  return 0;
}
