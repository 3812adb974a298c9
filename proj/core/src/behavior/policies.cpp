#include "doctor/behavior/policies.hpp"

#include <algorithm>
#include <cmath>

#include "doctor/envs/dial.hpp"
#include "doctor/errors.hpp"

namespace doctor::behavior {

std::vector<int> soc_safe_set(const Eigen::MatrixXd& symptom_shift, double kappa,
                              const std::vector<double>& observation) {
  const double threshold = 1.0 - kappa / 2.0;
  std::vector<int> safe;
  for (int a = 0; a < symptom_shift.rows(); ++a) {
    bool ok = true;
    for (std::size_t i = 0; i < observation.size(); ++i) {
      if (observation[i] >= threshold && symptom_shift(a, static_cast<int>(i)) > 0.0) {
        ok = false;
        break;
      }
    }
    if (ok) safe.push_back(a);
  }
  return safe;
}

int soc_select(const SocPolicyState& state, const Eigen::MatrixXd& symptom_shift,
               const std::vector<double>& observation) {
  auto safe = soc_safe_set(symptom_shift, state.kappa, observation);
  if (!safe.empty()) {
    int best = safe[0];
    for (int a : safe) {
      if (state.q(a) > state.q(best)) best = a;
    }
    return best;
  }
  // Fallback: fewest violated symptom constraints, ties to lowest index.
  const double threshold = 1.0 - state.kappa / 2.0;
  int best = 0;
  int best_violations = -1;
  for (int a = 0; a < symptom_shift.rows(); ++a) {
    int violations = 0;
    for (std::size_t i = 0; i < observation.size(); ++i) {
      if (observation[i] >= threshold && symptom_shift(a, static_cast<int>(i)) > 0.0) {
        ++violations;
      }
    }
    if (best_violations < 0 || violations < best_violations) {
      best = a;
      best_violations = violations;
    }
  }
  return best;
}

void soc_update(SocPolicyState& state, int action, double reward) {
  if (action < 0 || action >= state.q.size()) throw UsageError("soc_update: bad action index");
  state.q(action) += state.alpha * (reward - state.q(action));
}

SocPolicy::SocPolicy(const envs::TreatmentEnvSpec& spec, double alpha)
    : q0_(spec.soc_q0), symptom_shift_(spec.symptom_shift) {
  state_.q = q0_;
  state_.alpha = alpha;
  state_.kappa = spec.kappa;
}

void SocPolicy::begin_episode(Rng&) { state_.q = q0_; }

std::vector<double> SocPolicy::select(const std::vector<double>& observation, Rng&) {
  return {static_cast<double>(soc_select(state_, symptom_shift_, observation))};
}

void SocPolicy::observe_reward(const std::vector<double>& action, double reward) {
  soc_update(state_, static_cast<int>(action[0]), reward);
}

void MixturePolicy::begin_episode(Rng& rng) {
  bias_.resize(action_dim_);
  for (auto& b : bias_) b = rng.uniform(-1.0, 1.0);
}

std::vector<double> MixturePolicy::select(const std::vector<double>&, Rng& rng) {
  std::vector<double> a(action_dim_);
  for (int i = 0; i < action_dim_; ++i) {
    a[i] = std::clamp(bias_[i] + rng.normal(0.0, sigma_), -1.0, 1.0);
  }
  return a;
}

EpsGreedyChainPolicy::EpsGreedyChainPolicy(const envs::ChainMdpSpec& spec, double epsilon)
    : spec_(spec), q_star_(envs::value_iteration(spec)), epsilon_(epsilon) {}

void EpsGreedyChainPolicy::begin_episode(Rng&) { t_ = 0; }

std::vector<double> EpsGreedyChainPolicy::select(const std::vector<double>& observation,
                                                 Rng& rng) {
  int state = 0;
  for (std::size_t i = 0; i < observation.size(); ++i) {
    if (observation[i] > 0.5) state = static_cast<int>(i);
  }
  int action;
  if (rng.uniform(0.0, 1.0) < epsilon_) {
    action = static_cast<int>(rng.index(spec_.n_actions));
  } else {
    int remaining = std::max(0, spec_.horizon - 1 - t_);
    Eigen::Index best = 0;
    q_star_[remaining].row(state).maxCoeff(&best);
    action = static_cast<int>(best);
  }
  ++t_;
  return {static_cast<double>(action)};
}

std::vector<double> EpsGreedyMazePolicy::select(const std::vector<double>& observation,
                                                Rng& rng) {
  if (rng.uniform(0.0, 1.0) < epsilon_) {
    return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  }
  // PD controller toward the goal.
  double ax = 2.0 * (spec_.goal[0] - observation[0]) - 1.5 * observation[2];
  double ay = 2.0 * (spec_.goal[1] - observation[1]) - 1.5 * observation[3];
  return {std::clamp(ax, -1.0, 1.0), std::clamp(ay, -1.0, 1.0)};
}

std::unique_ptr<Policy> make_policy(const std::string& kind, const envs::Env& env,
                                    const Config& cfg) {
  if (kind == "soc") {
    const auto* treat = dynamic_cast<const envs::TreatmentEnv*>(&env);
    if (!treat) throw UsageError("policy 'soc' requires a treatment env");
    return std::make_unique<SocPolicy>(treat->spec(), cfg.get_double("policy.alpha", 0.25));
  }
  if (kind == "mixture") {
    return std::make_unique<MixturePolicy>(env.dims().action_dim,
                                           cfg.get_double("policy.sigma", 0.25));
  }
  if (kind == "epsgreedy") {
    double eps = cfg.get_double("policy.epsilon", 0.3);
    if (const auto* chain = dynamic_cast<const envs::ChainEnv*>(&env)) {
      return std::make_unique<EpsGreedyChainPolicy>(chain->spec(), eps);
    }
    if (const auto* maze = dynamic_cast<const envs::MazeEnv*>(&env)) {
      return std::make_unique<EpsGreedyMazePolicy>(maze->spec(), eps);
    }
    throw UsageError("policy 'epsgreedy' requires a chain or maze env");
  }
  throw UsageError("unknown policy kind: '" + kind + "'");
}

}  // namespace doctor::behavior
