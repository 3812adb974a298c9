#include "doctor/envs/chain.hpp"

#include <cmath>

#include "doctor/errors.hpp"

namespace doctor::envs {

ChainMdpSpec ChainMdpSpec::line_walk(int n_states, int horizon, double p_slip,
                                     double goal_reward, double left_reward) {
  ChainMdpSpec spec;
  spec.n_states = n_states;
  spec.n_actions = 2;
  spec.horizon = horizon;
  spec.reward = Eigen::MatrixXd::Zero(n_states, 2);
  for (int s = 0; s < n_states; ++s) {
    spec.reward(s, 0) = left_reward;
    spec.reward(s, 1) = (s == n_states - 2) ? goal_reward : 0.0;
  }
  spec.transitions.assign(2, Eigen::MatrixXd::Zero(n_states, n_states));
  auto clamp_state = [&](int s) { return std::max(0, std::min(n_states - 1, s)); };
  for (int s = 0; s < n_states; ++s) {
    spec.transitions[0](s, clamp_state(s - 1)) += 1.0 - p_slip;
    spec.transitions[0](s, clamp_state(s + 1)) += p_slip;
    spec.transitions[1](s, clamp_state(s + 1)) += 1.0 - p_slip;
    spec.transitions[1](s, clamp_state(s - 1)) += p_slip;
  }
  return spec;
}

void ChainMdpSpec::validate() const {
  if (n_states < 1 || n_actions < 1 || horizon < 1) {
    throw UsageError("chain: degenerate dimensions");
  }
  if (reward.rows() != n_states || reward.cols() != n_actions) {
    throw UsageError("chain: reward table shape mismatch");
  }
  if (static_cast<int>(transitions.size()) != n_actions) {
    throw UsageError("chain: transition table count mismatch");
  }
  for (const auto& t : transitions) {
    if (t.rows() != n_states || t.cols() != n_states) {
      throw UsageError("chain: transition matrix shape mismatch");
    }
    for (int s = 0; s < n_states; ++s) {
      if (std::abs(t.row(s).sum() - 1.0) > 1e-12) {
        throw UsageError("chain: transition row does not sum to 1");
      }
    }
  }
}

std::vector<Eigen::MatrixXd> value_iteration(const ChainMdpSpec& spec) {
  spec.validate();
  std::vector<Eigen::MatrixXd> q(spec.horizon);
  Eigen::VectorXd next_v = Eigen::VectorXd::Zero(spec.n_states);
  for (int h = 0; h < spec.horizon; ++h) {
    q[h].resize(spec.n_states, spec.n_actions);
    for (int a = 0; a < spec.n_actions; ++a) {
      q[h].col(a) = spec.reward.col(a) + spec.transitions[a] * next_v;
    }
    next_v = q[h].rowwise().maxCoeff();
  }
  return q;
}

ChainEnv::ChainEnv(ChainMdpSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

std::vector<double> ChainEnv::reset(Rng&) {
  state_ = 0;
  t_ = 0;
  std::vector<double> obs(spec_.n_states, 0.0);
  obs[0] = 1.0;
  return obs;
}

StepResult ChainEnv::step(const std::vector<double>& action, Rng& rng) {
  if (action.size() != 1) throw UsageError("chain: expected a single action index");
  if (t_ >= spec_.horizon) throw UsageError("chain: stepping a finished episode");
  double raw = action[0];
  if (raw != std::floor(raw) || raw < 0 || raw >= spec_.n_actions) {
    throw UsageError("chain: invalid action index " + std::to_string(raw));
  }
  int a = static_cast<int>(raw);
  double u = rng.uniform(0.0, 1.0);
  double acc = 0.0;
  int next = spec_.n_states - 1;
  for (int s = 0; s < spec_.n_states; ++s) {
    acc += spec_.transitions[a](state_, s);
    if (u < acc) { next = s; break; }
  }
  StepResult res;
  res.reward = spec_.reward(state_, a);
  state_ = next;
  ++t_;
  res.done = (t_ == spec_.horizon);
  res.terminal = res.done ? TerminalKind::kHorizon : TerminalKind::kNone;
  res.observation.assign(spec_.n_states, 0.0);
  res.observation[state_] = 1.0;
  return res;
}

}  // namespace doctor::envs
