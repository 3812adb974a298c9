#pragma once

#include "doctor/envs/env.hpp"

namespace doctor::envs {

struct DialEnvSpec {
  int horizon = 20;
};

// Return-dial control: one continuous action in [-1,1], per-step reward
// (a+1)/2, state (t/H, cumulative reward). Any return in [0,H] is
// reachable by a constant action, which makes alignment directly
// measurable.
class DialEnv : public Env {
 public:
  explicit DialEnv(DialEnvSpec spec) : spec_(spec) {}

  std::string env_id() const override { return "dial"; }
  ModalityDims dims() const override { return {2, 1, ActionKind::kContinuous}; }
  int max_episode_steps() const override { return spec_.horizon; }

  std::vector<double> reset(Rng& rng) override;
  StepResult step(const std::vector<double>& action, Rng& rng) override;

  const DialEnvSpec& spec() const { return spec_; }

 private:
  DialEnvSpec spec_;
  int t_ = 0;
  double cumulative_ = 0.0;
};

}  // namespace doctor::envs
