#include "doctor/infer/infer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "doctor/errors.hpp"
#include "doctor/numeric.hpp"

namespace doctor::infer {

using model::kActionSlot;
using model::kReturnSlot;
using model::MaskedSequence;

void InferConfig::validate() const {
  if (n_candidates < 1) throw UsageError("infer: N must be >= 1");
  if (delta < 0.0) throw UsageError("infer: delta must be >= 0");
  if (gamma <= 0.0 || gamma > 1.0) throw UsageError("infer: gamma must be in (0,1]");
  if (boltzmann_beta < 0.0) throw UsageError("infer: beta must be >= 0");
}

InferConfig InferConfig::from_config(const Config& cfg, double r_max) {
  InferConfig ic;
  ic.n_candidates = static_cast<int>(cfg.get_int("infer.n", ic.n_candidates));
  double frac = cfg.get_double("infer.delta_frac", 0.05);
  ic.delta = cfg.get_double("infer.delta", frac * r_max);
  ic.gamma = cfg.get_double("infer.gamma", 1.0);
  ic.seed = static_cast<std::uint64_t>(cfg.get_int("infer.seed", 0));
  ic.two_pass = cfg.get_bool("infer.two_pass", false);
  ic.conditioning_only = cfg.get_bool("infer.conditioning_only", false);
  ic.boltzmann_beta = cfg.get_double("infer.beta", ic.boltzmann_beta);
  std::string rule = cfg.get_str("infer.selection", "double_check");
  if (rule == "double_check") {
    ic.selection = SelectionRule::kDoubleCheck;
  } else if (rule == "boltzmann") {
    ic.selection = SelectionRule::kBoltzmann;
  } else {
    throw UsageError("infer.selection must be double_check or boltzmann");
  }
  ic.validate();
  return ic;
}

std::vector<double> sample_returns(double target, double delta, int n, Rng& rng) {
  if (n < 1) throw UsageError("sample_returns: N must be >= 1");
  if (delta < 0.0) throw UsageError("sample_returns: delta must be >= 0");
  std::vector<double> samples(n);
  for (auto& s : samples) s = rng.uniform(target - delta, target + delta);
  return samples;
}

namespace {

std::vector<double> action_from_output(const model::Network& net,
                                       const model::ModelOutput& out, int t) {
  const auto& cfg = net.config();
  if (cfg.action_kind == ActionKind::kDiscrete) {
    Eigen::Index best = 0;
    out.recon_actions.row(t).maxCoeff(&best);
    return {static_cast<double>(best)};
  }
  std::vector<double> a(cfg.action_dim);
  for (int d = 0; d < cfg.action_dim; ++d) a[d] = out.recon_actions(t, d);
  return a;
}

}  // namespace

CandidateSet propose_candidates(const model::Network& net, MaskedSequence& window,
                                const std::vector<double>& return_samples, bool two_pass,
                                model::SeqCache& cache) {
  const int t = window.context_len - 1;
  const int action_slot = MaskedSequence::slot(t, kActionSlot);
  if (window.pad[action_slot]) throw UsageError("propose_candidates: current slot is padded");
  if (!window.mask[action_slot]) {
    throw UsageError("propose_candidates: current action slot must be masked");
  }

  CandidateSet cands;
  const auto& cfg = net.config();
  const bool discrete = cfg.action_kind == ActionKind::kDiscrete;
  for (double sample : return_samples) {
    window.returns(t) = sample;
    auto out = net.forward(window, &cache);
    if (!two_pass) {
      cands.returns.push_back(sample);
      cands.actions.push_back(action_from_output(net, out, t));
      cands.q.push_back(out.q(t));
      continue;
    }
    // Two-pass: write the candidate action into the sequence, unmask the
    // slot and re-score q against the realized action.
    if (discrete) {
      for (int a = 0; a < cfg.action_dim; ++a) {
        window.mask[action_slot] = false;
        window.actions(t, 0) = static_cast<double>(a);
        auto rescored = net.forward(window, &cache);
        window.mask[action_slot] = true;
        cands.returns.push_back(sample);
        cands.actions.push_back({static_cast<double>(a)});
        cands.q.push_back(rescored.q(t));
      }
    } else {
      auto action = action_from_output(net, out, t);
      window.mask[action_slot] = false;
      for (int d = 0; d < cfg.action_dim; ++d) window.actions(t, d) = action[d];
      auto rescored = net.forward(window, &cache);
      window.mask[action_slot] = true;
      cands.returns.push_back(sample);
      cands.actions.push_back(std::move(action));
      cands.q.push_back(rescored.q(t));
    }
  }
  return cands;
}

SelectResult double_check_select(const CandidateSet& cands, double target) {
  if (cands.size() == 0) throw UsageError("double_check_select: empty candidate set");
  int best = 0;
  double best_dist = std::abs(cands.q[0] - target);
  for (int i = 1; i < static_cast<int>(cands.size()); ++i) {
    double dist = std::abs(cands.q[i] - target);
    if (dist < best_dist) {
      best = i;
      best_dist = dist;
    }
  }
  return {cands.actions[best], cands.q[best], best};
}

std::vector<double> boltzmann_probabilities(const std::vector<double>& q, double beta) {
  if (q.empty()) throw UsageError("boltzmann: empty candidate set");
  if (beta < 0.0) throw UsageError("boltzmann: beta must be >= 0");
  double mx = *std::max_element(q.begin(), q.end());
  std::vector<double> p(q.size());
  double z = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    p[i] = std::exp(beta * (q[i] - mx));
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

int boltzmann_select(const CandidateSet& cands, double beta, Rng& rng) {
  auto p = boltzmann_probabilities(cands.q, beta);
  double u = rng.uniform(0.0, 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

RolloutResult rollout_aligned(envs::Env& env, const model::Network& net, double target_return,
                              const InferConfig& cfg) {
  cfg.validate();
  const auto& mc = net.config();
  const int K = mc.context_len;
  const int act_width = mc.action_width();

  Rng env_rng(derive_seed(cfg.seed, 0));
  Rng infer_rng(derive_seed(cfg.seed, 1));

  // History of executed steps: running target, state, action.
  std::vector<double> hist_targets;
  std::vector<std::vector<double>> hist_states;
  std::vector<std::vector<double>> hist_actions;

  MaskedSequence window;
  window.context_len = K;
  window.returns.setZero(K);
  window.states.setZero(K, mc.state_dim);
  window.actions.setZero(K, act_width);
  window.rewards.setZero(K);
  window.terminal.assign(K, false);

  model::SeqCache cache;
  RolloutResult result;
  double target = target_return;
  auto obs = env.reset(env_rng);
  bool done = false;

  while (!done) {
    // Most recent K-1 executed steps plus the current one, left-padded.
    const int n_hist = std::min<int>(K - 1, static_cast<int>(hist_targets.size()));
    const int n_pad = K - 1 - n_hist;
    window.mask.assign(3 * K, false);
    window.pad.assign(3 * K, false);
    window.returns.setZero();
    window.states.setZero();
    window.actions.setZero();
    for (int t = 0; t < n_pad; ++t) {
      for (int m = 0; m < 3; ++m) window.pad[3 * t + m] = true;
    }
    for (int t = 0; t < n_hist; ++t) {
      const std::size_t src = hist_targets.size() - n_hist + t;
      const int slot_t = n_pad + t;
      window.returns(slot_t) = hist_targets[src];
      for (int d = 0; d < mc.state_dim; ++d) window.states(slot_t, d) = hist_states[src][d];
      for (int d = 0; d < act_width; ++d) window.actions(slot_t, d) = hist_actions[src][d];
    }
    window.returns(K - 1) = target;
    for (int d = 0; d < mc.state_dim; ++d) window.states(K - 1, d) = obs[d];
    window.mask[MaskedSequence::slot(K - 1, kActionSlot)] = true;

    SelectResult sel;
    if (cfg.conditioning_only) {
      auto out = net.forward(window, &cache);
      sel.action = action_from_output(net, out, K - 1);
      sel.q = out.q(K - 1);
      sel.index = 0;
    } else {
      auto samples = sample_returns(target, cfg.delta, cfg.n_candidates, infer_rng);
      auto cands = propose_candidates(net, window, samples, cfg.two_pass, cache);
      if (cfg.selection == SelectionRule::kBoltzmann) {
        int idx = boltzmann_select(cands, cfg.boltzmann_beta, infer_rng);
        sel = {cands.actions[idx], cands.q[idx], idx};
      } else {
        sel = double_check_select(cands, target);
      }
    }
    if (!is_finite(sel.q)) throw NumericError("rollout: non-finite selected q");

    auto res = env.step(sel.action, env_rng);
    result.trajectory.states.push_back(obs);
    result.trajectory.actions.push_back(sel.action);
    result.trajectory.rewards.push_back(res.reward);
    result.step_targets.push_back(target);
    result.step_q.push_back(sel.q);
    result.step_candidate.push_back(sel.index);
    result.achieved_return += res.reward;

    hist_targets.push_back(target);
    hist_states.push_back(obs);
    hist_actions.push_back(sel.action);

    target = update_target_return(target, res.reward, cfg.gamma);
    obs = res.observation;
    done = res.done;
    if (done) result.outcome = res.terminal;
  }
  if (!result.trajectory.rewards.empty()) {
    result.trajectory.returns = compute_returns(result.trajectory.rewards, cfg.gamma);
  }
  return result;
}

void save_rollout_trace(const RolloutResult& result, const ModalityDims& dims, double gamma,
                        const std::string& env_id, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  nlohmann::json header = {{"format_version", 1},
                           {"kind", "rollout_trace"},
                           {"env_id", env_id},
                           {"gamma", gamma},
                           {"state_dim", dims.state_dim},
                           {"action_dim", dims.action_dim},
                           {"action_kind", to_string(dims.action_kind)},
                           {"achieved_return", result.achieved_return},
                           {"n_steps", result.trajectory.rewards.size()}};
  out << header.dump() << "\n";
  nlohmann::json rec = {{"states", result.trajectory.states},
                        {"actions", result.trajectory.actions},
                        {"rewards", result.trajectory.rewards},
                        {"targets", result.step_targets},
                        {"selected_q", result.step_q},
                        {"candidate_index", result.step_candidate}};
  out << rec.dump() << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace doctor::infer
