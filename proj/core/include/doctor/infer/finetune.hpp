#pragma once

#include <vector>

#include "doctor/dataset.hpp"
#include "doctor/envs/env.hpp"
#include "doctor/infer/infer.hpp"
#include "doctor/train/trainer.hpp"

namespace doctor::infer {

struct FinetuneConfig {
  int episodes = 200;            // interaction budget, full episodes
  int updates_per_episode = 200; // gradient steps after each rollout
  // Rollouts sample around the buffer's running max return with a wide
  // ball and Boltzmann selection over candidate values.
  double delta_scale = 2.0;      // delta = delta_scale * buffer r_max
  double beta = 100.0;
  int n_candidates = 32;
  std::uint64_t seed = 0;
};

struct FinetuneResult {
  std::vector<double> episode_returns;
  std::size_t buffer_size = 0;
};

// Online fine-tuning: seed the replay buffer with the top 5% of the
// offline data, then alternate one exploratory episode with a burst of
// gradient updates on the buffer.
FinetuneResult online_finetune(envs::Env& env, model::Network& net, const Dataset& offline,
                               const FinetuneConfig& cfg, const train::TrainConfig& train_cfg);

}  // namespace doctor::infer
