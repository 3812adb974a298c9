#pragma once

#include <array>

#include "doctor/envs/env.hpp"

namespace doctor::envs {

// Damped point mass in a box with one internal wall; the open passage
// below the wall makes the layout U-shaped. Reward is exp(-distance to
// goal), so it lies in (0,1] and equals 1 only at the goal.
struct MazeEnvSpec {
  double dt = 0.1;
  double damping = 0.9;
  int horizon = 300;
  std::array<double, 2> box_min{0.0, 0.0};
  std::array<double, 2> box_max{4.0, 4.0};
  // Vertical wall at x = wall_x spanning y in [wall_y_min, box_max.y].
  double wall_x = 2.0;
  double wall_y_min = 1.0;
  std::array<double, 2> start{0.8, 3.2};
  double start_noise = 0.1;
  std::array<double, 2> goal{3.2, 3.2};
};

class MazeEnv : public Env {
 public:
  explicit MazeEnv(MazeEnvSpec spec) : spec_(spec) {}

  std::string env_id() const override { return "maze"; }
  ModalityDims dims() const override { return {4, 2, ActionKind::kContinuous}; }
  int max_episode_steps() const override { return spec_.horizon; }

  std::vector<double> reset(Rng& rng) override;
  StepResult step(const std::vector<double>& action, Rng& rng) override;

  const MazeEnvSpec& spec() const { return spec_; }

  static double reward_at(const MazeEnvSpec& spec, double px, double py);

 private:
  MazeEnvSpec spec_;
  int t_ = 0;
  std::array<double, 2> pos_{};
  std::array<double, 2> vel_{};
};

}  // namespace doctor::envs
