#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "doctor/config.hpp"
#include "doctor/envs/env.hpp"
#include "doctor/model/network.hpp"
#include "doctor/trajectory.hpp"

namespace doctor::infer {

enum class SelectionRule { kDoubleCheck, kBoltzmann };

struct InferConfig {
  int n_candidates = 300;  // N
  double delta = 0.0;      // return-ball radius (absolute units)
  double gamma = 1.0;
  std::uint64_t seed = 0;
  // Re-score q with the candidate action written into the action slot;
  // for discrete actions this scores every action per sampled return.
  bool two_pass = false;
  // DT-style inference: one forward conditioned on the target, no
  // value validation. Equivalent to N=1, delta=0.
  bool conditioning_only = false;
  SelectionRule selection = SelectionRule::kDoubleCheck;
  double boltzmann_beta = 100.0;

  void validate() const;
  // infer.* keys; delta resolves as infer.delta_frac * r_max unless
  // infer.delta overrides it in absolute units.
  static InferConfig from_config(const Config& cfg, double r_max);
};

// N independent uniform draws from [target - delta, target + delta].
std::vector<double> sample_returns(double target, double delta, int n, Rng& rng);

// Index-aligned candidate returns, proposed actions and action-values.
struct CandidateSet {
  std::vector<double> returns;
  std::vector<std::vector<double>> actions;  // env-shaped ({index} when discrete)
  std::vector<double> q;

  std::size_t size() const { return q.size(); }
};

// One forward per sampled return on the history window with the current
// action slot masked; the action head proposes, the Q head at the same
// timestep evaluates. The window's current return slot is overwritten by
// each sample.
CandidateSet propose_candidates(const model::Network& net, model::MaskedSequence& window,
                                const std::vector<double>& return_samples, bool two_pass,
                                model::SeqCache& cache);

struct SelectResult {
  std::vector<double> action;
  double q = 0.0;
  int index = -1;
};

// The candidate whose action-value is nearest the target; ties to the
// lowest index.
SelectResult double_check_select(const CandidateSet& cands, double target);

// Softmax probabilities over candidate values, max-subtracted.
std::vector<double> boltzmann_probabilities(const std::vector<double>& q, double beta);
int boltzmann_select(const CandidateSet& cands, double beta, Rng& rng);

struct RolloutResult {
  Trajectory trajectory;
  double achieved_return = 0.0;    // plain reward sum
  envs::TerminalKind outcome = envs::TerminalKind::kNone;
  std::vector<double> step_targets;
  std::vector<double> step_q;
  std::vector<int> step_candidate;
};

// Aligned episode: per step, sample returns around the running target,
// propose and validate candidates, act, then update the target by
// (R - r)/gamma. The env stream and the sampling stream are separate
// sub-seeds, so selection-rule changes do not perturb env noise.
RolloutResult rollout_aligned(envs::Env& env, const model::Network& net, double target_return,
                              const InferConfig& cfg);

// Dataset-format trace with per-step audit records (target, selected q,
// candidate index).
void save_rollout_trace(const RolloutResult& result, const ModalityDims& dims, double gamma,
                        const std::string& env_id, const std::string& path);

}  // namespace doctor::infer
