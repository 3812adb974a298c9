#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "doctor/config.hpp"
#include "doctor/envs/chain.hpp"
#include "doctor/envs/env.hpp"
#include "doctor/envs/maze.hpp"
#include "doctor/envs/treatment.hpp"
#include "doctor/rng.hpp"

namespace doctor::behavior {

// Behavior policies hold per-episode mutable state; use one instance per
// rollout worker.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode(Rng& rng) = 0;
  virtual std::vector<double> select(const std::vector<double>& observation, Rng& rng) = 0;
  virtual void observe_reward(const std::vector<double>& action, double reward) = 0;
};

// Recency-weighted per-action value estimates of the Standard-of-Care
// clinician model.
struct SocPolicyState {
  Eigen::VectorXd q;  // initialized to E[R|a]
  double alpha = 0.25;
  double kappa = 0.6;
};

// Treatments whose symptom shifts do not raise any symptom already at or
// above 1 - kappa/2.
std::vector<int> soc_safe_set(const Eigen::MatrixXd& symptom_shift, double kappa,
                              const std::vector<double>& observation);

// Greedy over Q within the safe set; if the safe set is empty, the action
// violating the fewest symptom constraints (ties to the lowest index).
int soc_select(const SocPolicyState& state, const Eigen::MatrixXd& symptom_shift,
               const std::vector<double>& observation);

// Q(a) <- Q(a) + alpha (R - Q(a)) for the taken action only.
void soc_update(SocPolicyState& state, int action, double reward);

class SocPolicy : public Policy {
 public:
  explicit SocPolicy(const envs::TreatmentEnvSpec& spec, double alpha);

  void begin_episode(Rng& rng) override;
  std::vector<double> select(const std::vector<double>& observation, Rng& rng) override;
  void observe_reward(const std::vector<double>& action, double reward) override;

  const SocPolicyState& state() const { return state_; }

 private:
  Eigen::VectorXd q0_;
  Eigen::MatrixXd symptom_shift_;
  SocPolicyState state_;
};

// Per-episode constant bias with per-step Gaussian jitter; on the dial
// env this induces episode returns covering the whole [0, H] range.
class MixturePolicy : public Policy {
 public:
  MixturePolicy(int action_dim, double sigma) : action_dim_(action_dim), sigma_(sigma) {}

  void begin_episode(Rng& rng) override;
  std::vector<double> select(const std::vector<double>& observation, Rng& rng) override;
  void observe_reward(const std::vector<double>&, double) override {}

 private:
  int action_dim_;
  double sigma_;
  std::vector<double> bias_;
};

// Epsilon-greedy wrapper: chain uses the exact Q* table, maze a
// goal-seeking PD controller.
class EpsGreedyChainPolicy : public Policy {
 public:
  EpsGreedyChainPolicy(const envs::ChainMdpSpec& spec, double epsilon);

  void begin_episode(Rng& rng) override;
  std::vector<double> select(const std::vector<double>& observation, Rng& rng) override;
  void observe_reward(const std::vector<double>&, double) override {}

 private:
  envs::ChainMdpSpec spec_;
  std::vector<Eigen::MatrixXd> q_star_;
  double epsilon_;
  int t_ = 0;
};

class EpsGreedyMazePolicy : public Policy {
 public:
  EpsGreedyMazePolicy(const envs::MazeEnvSpec& spec, double epsilon)
      : spec_(spec), epsilon_(epsilon) {}

  void begin_episode(Rng&) override {}
  std::vector<double> select(const std::vector<double>& observation, Rng& rng) override;
  void observe_reward(const std::vector<double>&, double) override {}

 private:
  envs::MazeEnvSpec spec_;
  double epsilon_;
};

// policy.kind = soc | mixture | epsgreedy (with policy.alpha,
// policy.sigma, policy.epsilon).
std::unique_ptr<Policy> make_policy(const std::string& kind, const envs::Env& env,
                                    const Config& cfg);

}  // namespace doctor::behavior
