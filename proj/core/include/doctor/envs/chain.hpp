#pragma once

#include <vector>

#include <Eigen/Dense>

#include "doctor/envs/env.hpp"

namespace doctor::envs {

// Tabular finite-horizon MDP on a line with an explicit transition table,
// used as an exact oracle for value learning.
struct ChainMdpSpec {
  int n_states = 5;
  int n_actions = 2;
  int horizon = 6;
  Eigen::MatrixXd reward;                   // n_states x n_actions
  std::vector<Eigen::MatrixXd> transitions; // per action, n_states x n_states

  // Line walk: action 0 moves left, action 1 moves right, clamped at the
  // ends; p_slip sends the move the other way. Reward `goal_reward` for
  // moving right from the second-to-last state, `left_reward` for any
  // left move.
  static ChainMdpSpec line_walk(int n_states, int horizon, double p_slip,
                                double goal_reward = 1.0, double left_reward = 0.05);

  void validate() const;
};

// Exact optimal action-values by backward induction. Q[h] holds values
// with h+1 steps remaining, h in [0, horizon).
std::vector<Eigen::MatrixXd> value_iteration(const ChainMdpSpec& spec);

class ChainEnv : public Env {
 public:
  explicit ChainEnv(ChainMdpSpec spec);

  std::string env_id() const override { return "chain"; }
  // States are one-hot so the dataset encoding matches the other envs.
  ModalityDims dims() const override {
    return {spec_.n_states, spec_.n_actions, ActionKind::kDiscrete};
  }
  int max_episode_steps() const override { return spec_.horizon; }

  std::vector<double> reset(Rng& rng) override;
  StepResult step(const std::vector<double>& action, Rng& rng) override;

  const ChainMdpSpec& spec() const { return spec_; }
  int hidden_state() const { return state_; }

 private:
  ChainMdpSpec spec_;
  int state_ = 0;
  int t_ = 0;
};

}  // namespace doctor::envs
