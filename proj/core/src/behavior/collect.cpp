#include "doctor/behavior/collect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctor/behavior/policies.hpp"
#include "doctor/envs/env.hpp"
#include "doctor/errors.hpp"
#include "doctor/parallel.hpp"

namespace doctor::behavior {

Dataset collect_dataset(const std::string& env_id, const std::string& policy_kind,
                        std::size_t n_episodes, double gamma, std::uint64_t seed,
                        const Config& cfg, int threads) {
  if (n_episodes < 1) throw UsageError("collect_dataset: n_episodes must be >= 1");
  if (gamma < 0.0 || gamma > 1.0) throw UsageError("collect_dataset: gamma outside [0,1]");

  auto probe = envs::make_env(env_id, cfg);
  Dataset ds;
  ds.gamma = gamma;
  ds.env_id = env_id;
  ds.dims = probe->dims();
  ds.trajectories.resize(n_episodes);

  parallel_for(n_episodes, threads, [&](std::size_t e) {
    Rng rng(derive_seed(seed, e));
    auto env = envs::make_env(env_id, cfg);
    auto policy = make_policy(policy_kind, *env, cfg);
    policy->begin_episode(rng);

    Trajectory traj;
    auto obs = env->reset(rng);
    bool done = false;
    while (!done) {
      auto action = policy->select(obs, rng);
      auto res = env->step(action, rng);
      policy->observe_reward(action, res.reward);
      traj.states.push_back(obs);
      traj.actions.push_back(action);
      traj.rewards.push_back(res.reward);
      obs = res.observation;
      done = res.done;
    }
    traj.returns = compute_returns(traj.rewards, gamma);
    ds.trajectories[e] = std::move(traj);
  });

  ds.r_max = max_initial_return(ds);
  return ds;
}

namespace {

// Indices ranked by returns[0] descending, ties by original index.
std::vector<std::size_t> rank_by_return(const Dataset& ds) {
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ds.trajectories[a].returns[0] > ds.trajectories[b].returns[0];
  });
  return order;
}

std::size_t cut_count(double percent, std::size_t n) {
  // ceil(percent*n/100) with a guard against FP noise on exact multiples.
  return static_cast<std::size_t>(std::ceil(percent * static_cast<double>(n) / 100.0 - 1e-9));
}

Dataset subset_in_original_order(const Dataset& ds, const std::vector<bool>& keep) {
  Dataset out;
  out.gamma = ds.gamma;
  out.env_id = ds.env_id;
  out.dims = ds.dims;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (keep[i]) out.trajectories.push_back(ds.trajectories[i]);
  }
  out.r_max = max_initial_return(out);
  return out;
}

}  // namespace

Dataset filter_top_returns(const Dataset& ds, double percent) {
  if (percent < 0.0 || percent >= 100.0) {
    throw UsageError("filter_top_returns: percent must be in [0,100)");
  }
  auto order = rank_by_return(ds);
  std::size_t k = cut_count(percent, ds.size());
  if (k >= ds.size()) throw UsageError("filter_top_returns: filtering would empty the dataset");
  std::vector<bool> keep(ds.size(), true);
  for (std::size_t i = 0; i < k; ++i) keep[order[i]] = false;
  return subset_in_original_order(ds, keep);
}

Dataset keep_top_returns(const Dataset& ds, double percent) {
  if (percent <= 0.0 || percent > 100.0) {
    throw UsageError("keep_top_returns: percent must be in (0,100]");
  }
  auto order = rank_by_return(ds);
  std::size_t k = std::min(ds.size(), std::max<std::size_t>(1, cut_count(percent, ds.size())));
  std::vector<bool> keep(ds.size(), false);
  for (std::size_t i = 0; i < k; ++i) keep[order[i]] = true;
  // Boundary ties: retain everything matching the cut return.
  double boundary = ds.trajectories[order[k - 1]].returns[0];
  for (std::size_t i = k; i < ds.size(); ++i) {
    if (ds.trajectories[order[i]].returns[0] == boundary) keep[order[i]] = true;
  }
  return subset_in_original_order(ds, keep);
}

}  // namespace doctor::behavior
