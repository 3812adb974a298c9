#include "doctor/envs/treatment.hpp"

#include <cmath>

#include "doctor/errors.hpp"

namespace doctor::envs {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void TreatmentEnvSpec::validate() const {
  if (n_states < 2 || n_actions < 1 || obs_dim < 1 || max_steps < 1) {
    throw UsageError("treatment: degenerate dimensions");
  }
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double mass = (modulation.row(a).array() * base_transitions.row(s).array()).sum();
      if (mass <= 0.0) throw UsageError("treatment: degenerate modulation at (s,a)=(" +
                                        std::to_string(s) + "," + std::to_string(a) + ")");
      double row_sum = treatment_transition_row(*this, s, a).sum();
      if (std::abs(row_sum - 1.0) > 1e-9) {
        throw UsageError("treatment: transition row does not sum to 1");
      }
    }
  }
}

Eigen::VectorXd treatment_transition_row(const TreatmentEnvSpec& spec, int s, int a) {
  if (s < 0 || s >= spec.n_states) throw UsageError("treatment: state index out of range");
  if (a < 0 || a >= spec.n_actions) throw UsageError("treatment: action index out of range");
  double p_r = spec.remission_prob(s, a);
  double p_a = spec.adverse_prob(s, a);
  Eigen::ArrayXd weighted = spec.modulation.row(a).array() * spec.base_transitions.row(s).array();
  double total = weighted.sum();
  if (total <= 0.0) throw UsageError("treatment: degenerate modulation row");
  Eigen::VectorXd row(spec.n_states + 2);
  row(0) = p_r;
  row(1) = p_a;
  row.tail(spec.n_states) = (1.0 - p_r - p_a) * (weighted / total).matrix();
  return row;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transitions) {
  const auto n = transitions.rows();
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd next = transitions.transpose() * dist;
    next /= next.sum();
    double delta = (next - dist).cwiseAbs().maxCoeff();
    dist = next;
    if (delta < 1e-14) break;
  }
  return dist;
}

namespace {

int sample_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  double u = rng.uniform(0.0, 1.0);
  double acc = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return i;
  }
  return static_cast<int>(probs.size()) - 1;
}

// Single-step reward draw used for the SoC prior E[R|a]: start from the
// initial distribution, apply treatment a once.
double single_step_reward(const TreatmentEnvSpec& spec, int a, Rng& rng) {
  int s = sample_categorical(spec.initial_dist, rng);
  Eigen::VectorXd row = treatment_transition_row(spec, s, a);
  int outcome = sample_categorical(row, rng);
  if (outcome == 0) return spec.remission_reward;
  if (outcome == 1) return -spec.remission_reward;
  int next = outcome - 2;
  double symptom_sum = 0.0;
  for (int d = 0; d < spec.obs_dim; ++d) {
    double raw = rng.normal(spec.obs_mean(next, d), spec.obs_std(next, d));
    symptom_sum += expit(raw + spec.symptom_shift(a, d));
  }
  return -spec.treatment_cost - spec.symptom_cost * symptom_sum;
}

}  // namespace

TreatmentEnvSpec make_treatment_spec(std::uint64_t seed, const Config& cfg) {
  TreatmentEnvSpec spec;
  spec.seed = seed;
  spec.n_states = static_cast<int>(cfg.get_int("env.treatment.n_states", spec.n_states));
  spec.n_actions = static_cast<int>(cfg.get_int("env.treatment.n_actions", spec.n_actions));
  spec.obs_dim = static_cast<int>(cfg.get_int("env.treatment.obs_dim", spec.obs_dim));
  spec.kappa = cfg.get_double("env.treatment.kappa", spec.kappa);
  spec.remission_reward = cfg.get_double("env.treatment.remission_reward", spec.remission_reward);
  spec.treatment_cost = cfg.get_double("env.treatment.treatment_cost", spec.treatment_cost);
  spec.symptom_cost = cfg.get_double("env.treatment.symptom_cost", spec.symptom_cost);
  spec.max_steps = static_cast<int>(cfg.get_int("env.treatment.max_steps", spec.max_steps));

  const int ns = spec.n_states;
  const int na = spec.n_actions;
  const int no = spec.obs_dim;

  Rng rng(derive_seed(seed, 0xd0c70));

  // Disease graph with chain-like locality.
  spec.base_transitions.resize(ns, ns);
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < ns; ++j) {
      double locality = std::exp(-std::abs(i - j) / 1.5);
      spec.base_transitions(i, j) = locality * (-std::log(rng.uniform(1e-12, 1.0)));
    }
    spec.base_transitions.row(i) /= spec.base_transitions.row(i).sum();
  }

  // Treatment efficacy with positively coupled toxicity: strong drugs
  // carry higher adverse risk and larger symptom side effects.
  Eigen::VectorXd efficacy(na), toxicity(na);
  for (int a = 0; a < na; ++a) {
    efficacy(a) = rng.uniform(0.15, 0.95);
    toxicity(a) = efficacy(a) * std::exp(rng.normal(0.0, 0.3));
  }

  Eigen::VectorXd remission_affinity(ns), severity(ns);
  for (int s = 0; s < ns; ++s) {
    remission_affinity(s) = rng.uniform(0.3, 1.0);
    severity(s) = rng.uniform(0.2, 1.0);
  }

  spec.remission_prob.resize(ns, na);
  spec.adverse_prob.resize(ns, na);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      double p_r = std::min(0.45, 0.30 * remission_affinity(s) * efficacy(a));
      double p_a = std::min(0.35, 0.16 * severity(s) * toxicity(a));
      if (p_r + p_a > 0.9) {
        double scale = 0.9 / (p_r + p_a);
        p_r *= scale;
        p_a *= scale;
      }
      spec.remission_prob(s, a) = p_r;
      spec.adverse_prob(s, a) = p_a;
    }
  }

  spec.modulation.resize(na, ns);
  for (int a = 0; a < na; ++a) {
    for (int s = 0; s < ns; ++s) spec.modulation(a, s) = std::exp(rng.normal(0.0, 0.5));
  }

  spec.obs_mean.resize(ns, no);
  spec.obs_std.resize(ns, no);
  for (int s = 0; s < ns; ++s) {
    for (int d = 0; d < no; ++d) {
      spec.obs_mean(s, d) = rng.normal(0.0, 1.0);
      spec.obs_std(s, d) = rng.uniform(0.3, 0.7);
    }
  }

  // Sparse symptom shifts; positive entries (side effects) scale with
  // toxicity, negative entries model symptom relief.
  spec.symptom_shift = Eigen::MatrixXd::Zero(na, no);
  for (int a = 0; a < na; ++a) {
    for (int d = 0; d < no; ++d) {
      double u = rng.uniform(0.0, 1.0);
      if (u < 0.25) {
        spec.symptom_shift(a, d) = rng.uniform(0.3, 1.2) * toxicity(a);
      } else if (u < 0.40) {
        spec.symptom_shift(a, d) = -rng.uniform(0.2, 0.8);
      }
    }
  }

  spec.initial_dist = stationary_distribution(spec.base_transitions);

  // SoC prior Q0(a) = E[R|a], Monte-Carlo over single-step draws.
  Rng q0_rng(derive_seed(seed, 0xd0c71));
  spec.soc_q0.resize(na);
  constexpr int kDraws = 10000;
  for (int a = 0; a < na; ++a) {
    double acc = 0.0;
    for (int i = 0; i < kDraws; ++i) acc += single_step_reward(spec, a, q0_rng);
    spec.soc_q0(a) = acc / kDraws;
  }

  spec.validate();
  return spec;
}

TreatmentEnv::TreatmentEnv(TreatmentEnvSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

std::string TreatmentEnv::env_id() const {
  return "treatment:" + std::to_string(spec_.seed);
}

std::vector<double> TreatmentEnv::observe(int state, int action, Rng& rng) const {
  std::vector<double> obs(spec_.obs_dim);
  for (int d = 0; d < spec_.obs_dim; ++d) {
    double raw = rng.normal(spec_.obs_mean(state, d), spec_.obs_std(state, d));
    double shift = action >= 0 ? spec_.symptom_shift(action, d) : 0.0;
    obs[d] = std::clamp(expit(raw + shift), 0.0, 1.0);
  }
  return obs;
}

std::vector<double> TreatmentEnv::reset(Rng& rng) {
  state_ = sample_categorical(spec_.initial_dist, rng);
  t_ = 0;
  done_ = false;
  return observe(state_, -1, rng);
}

StepResult TreatmentEnv::step(const std::vector<double>& action, Rng& rng) {
  if (done_) throw UsageError("treatment: stepping a finished episode");
  if (action.size() != 1) throw UsageError("treatment: expected a single action index");
  double raw = action[0];
  if (raw != std::floor(raw) || raw < 0 || raw >= spec_.n_actions) {
    throw UsageError("treatment: invalid action index " + std::to_string(raw));
  }
  int a = static_cast<int>(raw);

  Eigen::VectorXd row = treatment_transition_row(spec_, state_, a);
  int outcome = sample_categorical(row, rng);
  StepResult res;
  ++t_;
  if (outcome == 0) {
    res.reward = spec_.remission_reward;
    res.done = true;
    res.terminal = TerminalKind::kRemission;
    res.observation.assign(spec_.obs_dim, 0.0);
  } else if (outcome == 1) {
    res.reward = -spec_.remission_reward;
    res.done = true;
    res.terminal = TerminalKind::kAdverse;
    res.observation.assign(spec_.obs_dim, 0.0);
  } else {
    state_ = outcome - 2;
    res.observation = observe(state_, a, rng);
    double symptom_sum = 0.0;
    for (double o : res.observation) symptom_sum += o;
    res.reward = -spec_.treatment_cost - spec_.symptom_cost * symptom_sum;
    res.done = (t_ >= spec_.max_steps);
    res.terminal = res.done ? TerminalKind::kHorizon : TerminalKind::kNone;
  }
  done_ = res.done;
  return res;
}

}  // namespace doctor::envs
