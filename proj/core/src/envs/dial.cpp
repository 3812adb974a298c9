#include "doctor/envs/dial.hpp"

#include <algorithm>

#include "doctor/errors.hpp"

namespace doctor::envs {

std::vector<double> DialEnv::reset(Rng&) {
  t_ = 0;
  cumulative_ = 0.0;
  return {0.0, 0.0};
}

StepResult DialEnv::step(const std::vector<double>& action, Rng&) {
  if (action.size() != 1) throw UsageError("dial: expected a 1-d action");
  if (t_ >= spec_.horizon) throw UsageError("dial: stepping a finished episode");
  double a = std::clamp(action[0], -1.0, 1.0);
  double reward = (a + 1.0) / 2.0;
  cumulative_ += reward;
  ++t_;
  StepResult res;
  res.reward = reward;
  res.done = (t_ == spec_.horizon);
  res.terminal = res.done ? TerminalKind::kHorizon : TerminalKind::kNone;
  res.observation = {static_cast<double>(t_) / spec_.horizon, cumulative_};
  return res;
}

}  // namespace doctor::envs
