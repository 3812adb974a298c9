#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "doctor/envs/env.hpp"

namespace doctor::envs {

// Clinical treatment POMDP: hidden disease states plus terminal remission
// and adverse-event states, discrete treatments that multiplicatively
// modulate disease progression, and symptom observations in [0,1]^d_o.
// Every field is derived deterministically from the environment seed.
struct TreatmentEnvSpec {
  int n_states = 8;
  int n_actions = 6;
  int obs_dim = 8;
  double kappa = 0.6;             // symptom danger threshold
  double remission_reward = 16.0; // r_r; adverse reward is -r_r
  double treatment_cost = 1.0;    // c_a
  double symptom_cost = 0.2;      // c_o
  int max_steps = 8;
  std::uint64_t seed = 1;

  Eigen::MatrixXd base_transitions;  // n_s x n_s, row-stochastic
  Eigen::MatrixXd modulation;        // n_a x n_s, positive (m_a)
  Eigen::MatrixXd remission_prob;    // n_s x n_a
  Eigen::MatrixXd adverse_prob;      // n_s x n_a
  Eigen::MatrixXd obs_mean;          // n_s x d_o
  Eigen::MatrixXd obs_std;           // n_s x d_o
  Eigen::MatrixXd symptom_shift;     // n_a x d_o (delta_a)
  Eigen::VectorXd initial_dist;      // n_s, stationary mix of the base graph
  Eigen::VectorXd soc_q0;            // n_a, Monte-Carlo E[R|a] for the SoC policy

  void validate() const;
};

// Procedural instantiation from the environment seed; dimension and cost
// defaults can be overridden before generation via env.treatment.* keys.
TreatmentEnvSpec make_treatment_spec(std::uint64_t seed, const Config& cfg = Config());

// Full transition row over {s_r, s_a, s_1..s_ns} for hidden state s and
// treatment a. Disease mass is the base row reweighted by the treatment's
// modulation vector.
Eigen::VectorXd treatment_transition_row(const TreatmentEnvSpec& spec, int s, int a);

// Stationary distribution of a row-stochastic matrix by power iteration.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transitions);

double expit(double x);

class TreatmentEnv : public Env {
 public:
  explicit TreatmentEnv(TreatmentEnvSpec spec);

  std::string env_id() const override;
  ModalityDims dims() const override {
    return {spec_.obs_dim, spec_.n_actions, ActionKind::kDiscrete};
  }
  int max_episode_steps() const override { return spec_.max_steps; }

  std::vector<double> reset(Rng& rng) override;
  StepResult step(const std::vector<double>& action, Rng& rng) override;

  const TreatmentEnvSpec& spec() const { return spec_; }
  // Diagnostic access for distribution tests.
  int hidden_state() const { return state_; }

 private:
  std::vector<double> observe(int state, int action, Rng& rng) const;

  TreatmentEnvSpec spec_;
  int state_ = 0;
  int t_ = 0;
  bool done_ = true;
};

}  // namespace doctor::envs
