#include "doctor/infer/finetune.hpp"

#include <algorithm>

#include "doctor/behavior/collect.hpp"
#include "doctor/errors.hpp"

namespace doctor::infer {

FinetuneResult online_finetune(envs::Env& env, model::Network& net, const Dataset& offline,
                               const FinetuneConfig& cfg, const train::TrainConfig& train_cfg) {
  if (cfg.episodes < 0 || cfg.updates_per_episode < 0) {
    throw UsageError("finetune: negative budget");
  }
  Dataset buffer = behavior::keep_top_returns(offline, 5.0);

  train::Trainer trainer(net, buffer, train_cfg);
  FinetuneResult result;
  for (int e = 0; e < cfg.episodes; ++e) {
    double r_max = max_initial_return(buffer);
    InferConfig ic;
    ic.n_candidates = cfg.n_candidates;
    ic.delta = cfg.delta_scale * std::abs(r_max);
    ic.gamma = buffer.gamma;
    ic.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(e));
    ic.selection = SelectionRule::kBoltzmann;
    ic.boltzmann_beta = cfg.beta;

    auto rollout = rollout_aligned(env, net, r_max, ic);
    if (!rollout.trajectory.rewards.empty()) {
      rollout.trajectory.returns = compute_returns(rollout.trajectory.rewards, buffer.gamma);
      buffer.trajectories.push_back(rollout.trajectory);
      buffer.r_max = max_initial_return(buffer);
    }
    result.episode_returns.push_back(rollout.achieved_return);

    for (int u = 0; u < cfg.updates_per_episode; ++u) trainer.step();
  }
  result.buffer_size = buffer.size();
  return result;
}

}  // namespace doctor::infer
