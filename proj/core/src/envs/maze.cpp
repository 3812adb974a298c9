#include "doctor/envs/maze.hpp"

#include <algorithm>
#include <cmath>

#include "doctor/errors.hpp"

namespace doctor::envs {

double MazeEnv::reward_at(const MazeEnvSpec& spec, double px, double py) {
  double dx = px - spec.goal[0];
  double dy = py - spec.goal[1];
  return std::exp(-std::sqrt(dx * dx + dy * dy));
}

std::vector<double> MazeEnv::reset(Rng& rng) {
  t_ = 0;
  pos_[0] = spec_.start[0] + rng.uniform(-spec_.start_noise, spec_.start_noise);
  pos_[1] = spec_.start[1] + rng.uniform(-spec_.start_noise, spec_.start_noise);
  vel_ = {0.0, 0.0};
  return {pos_[0], pos_[1], vel_[0], vel_[1]};
}

StepResult MazeEnv::step(const std::vector<double>& action, Rng&) {
  if (action.size() != 2) throw UsageError("maze: expected a 2-d action");
  if (t_ >= spec_.horizon) throw UsageError("maze: stepping a finished episode");
  double ax = std::clamp(action[0], -1.0, 1.0);
  double ay = std::clamp(action[1], -1.0, 1.0);
  vel_[0] = spec_.damping * vel_[0] + spec_.dt * ax;
  vel_[1] = spec_.damping * vel_[1] + spec_.dt * ay;

  double nx = pos_[0] + spec_.dt * vel_[0];
  double ny = pos_[1] + spec_.dt * vel_[1];

  // Internal wall: block crossings of x = wall_x where the crossing
  // point lies within the wall's y-extent.
  if ((pos_[0] - spec_.wall_x) * (nx - spec_.wall_x) < 0.0) {
    double frac = (spec_.wall_x - pos_[0]) / (nx - pos_[0]);
    double y_cross = pos_[1] + frac * (ny - pos_[1]);
    if (y_cross >= spec_.wall_y_min) {
      double side = pos_[0] < spec_.wall_x ? -1e-6 : 1e-6;
      nx = spec_.wall_x + side;
      vel_[0] = 0.0;
    }
  }
  // Outer box.
  if (nx < spec_.box_min[0]) { nx = spec_.box_min[0]; vel_[0] = 0.0; }
  if (nx > spec_.box_max[0]) { nx = spec_.box_max[0]; vel_[0] = 0.0; }
  if (ny < spec_.box_min[1]) { ny = spec_.box_min[1]; vel_[1] = 0.0; }
  if (ny > spec_.box_max[1]) { ny = spec_.box_max[1]; vel_[1] = 0.0; }

  pos_ = {nx, ny};
  ++t_;
  StepResult res;
  res.reward = reward_at(spec_, pos_[0], pos_[1]);
  res.done = (t_ == spec_.horizon);
  res.terminal = res.done ? TerminalKind::kHorizon : TerminalKind::kNone;
  res.observation = {pos_[0], pos_[1], vel_[0], vel_[1]};
  return res;
}

}  // namespace doctor::envs
