#include "doctor/trajectory.hpp"

#include "doctor/errors.hpp"

namespace doctor {

std::vector<double> compute_returns(const std::vector<double>& rewards, double gamma) {
  if (rewards.empty()) throw UsageError("compute_returns: empty reward sequence");
  if (gamma < 0.0 || gamma > 1.0) {
    throw UsageError("compute_returns: gamma must be in [0,1]");
  }
  std::vector<double> returns(rewards.size());
  returns.back() = rewards.back();
  for (std::size_t t = rewards.size() - 1; t-- > 0;) {
    returns[t] = rewards[t] + gamma * returns[t + 1];
  }
  return returns;
}

double update_target_return(double target_return, double reward, double gamma) {
  if (gamma <= 0.0) throw UsageError("update_target_return: gamma must be positive");
  return (target_return - reward) / gamma;
}

SubTrajectory window_ending_at(const Trajectory& traj, int context_len, std::size_t end) {
  if (context_len < 1) throw UsageError("window: context length must be >= 1");
  if (end >= traj.horizon()) throw UsageError("window: end index out of range");
  const int K = context_len;
  SubTrajectory w;
  w.context_len = K;
  w.returns.assign(K, 0.0);
  w.states.assign(K, {});
  w.actions.assign(K, {});
  w.rewards.assign(K, 0.0);
  w.pad.assign(K, true);
  w.terminal.assign(K, false);

  // Real steps fill the rightmost slots; slot k holds step end-K+1+k.
  const long first = static_cast<long>(end) - K + 1;
  w.start = static_cast<std::size_t>(first < 0 ? 0 : first);
  for (int k = 0; k < K; ++k) {
    long t = first + k;
    if (t < 0) continue;
    auto ti = static_cast<std::size_t>(t);
    w.returns[k] = traj.returns[ti];
    w.states[k] = traj.states[ti];
    w.actions[k] = traj.actions[ti];
    w.rewards[k] = traj.rewards[ti];
    w.pad[k] = false;
    w.terminal[k] = (ti + 1 == traj.horizon());
  }
  return w;
}

SubTrajectory sample_subtrajectory(const Trajectory& traj, int context_len, Rng& rng) {
  if (traj.horizon() == 0) throw UsageError("sample_subtrajectory: empty trajectory");
  std::size_t end = rng.index(traj.horizon());
  return window_ending_at(traj, context_len, end);
}

}  // namespace doctor
