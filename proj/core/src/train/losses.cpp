#include "doctor/train/losses.hpp"

#include <cmath>

#include "doctor/errors.hpp"

namespace doctor::train {

using model::kReturnSlot;
using model::MaskedSequence;

double expectile_weight(double u, double nu) {
  if (nu <= 0.0 || nu >= 1.0) throw UsageError("expectile_weight: nu must be in (0,1)");
  return std::abs(nu - (u < 0.0 ? 1.0 : 0.0));
}

LossCounts count_loss_targets(const MaskedSequence& seq) {
  LossCounts counts;
  const int K = seq.context_len;
  for (int t = 0; t < K; ++t) {
    if (seq.pad[MaskedSequence::slot(t, kReturnSlot)]) continue;
    counts.slots += 1.0;
    bool next_real = t + 1 < K && !seq.pad[MaskedSequence::slot(t + 1, kReturnSlot)];
    if (seq.terminal[t] || next_real) counts.pairs += 1.0;
  }
  return counts;
}

namespace {

// Expectile TD terms over valid pairs; the bootstrap carries no gradient.
// bootstrap_q lets callers substitute a frozen snapshot.
double q_pair_sum(const MaskedSequence& seq, const model::ModelOutput& out,
                  const Eigen::VectorXd& bootstrap_q, double gamma, double nu,
                  double inv_pairs, Eigen::VectorXd* d_q) {
  const int K = seq.context_len;
  double sum = 0.0;
  for (int t = 0; t < K; ++t) {
    if (seq.pad[MaskedSequence::slot(t, kReturnSlot)]) continue;
    bool next_real = t + 1 < K && !seq.pad[MaskedSequence::slot(t + 1, kReturnSlot)];
    if (!seq.terminal[t] && !next_real) continue;
    double bootstrap = seq.terminal[t] ? 0.0 : bootstrap_q(t + 1);
    double u = seq.rewards(t) + gamma * bootstrap - out.q(t);
    double w = expectile_weight(u, nu);
    sum += w * u * u;
    if (d_q) (*d_q)(t) += -2.0 * w * u * inv_pairs;
  }
  return sum;
}

}  // namespace

double q_pair_sum_frozen(const MaskedSequence& seq, const model::ModelOutput& out,
                         const Eigen::VectorXd& frozen_q, double gamma, double nu) {
  return q_pair_sum(seq, out, frozen_q, gamma, nu, 0.0, nullptr);
}

LossSums loss_terms(const model::ModelConfig& cfg, const MaskedSequence& seq,
                    const model::ModelOutput& out, double gamma, double nu,
                    double inv_slots, double inv_pairs, model::OutputGrads* dout) {
  const int K = seq.context_len;
  if (dout) {
    dout->d_recon_returns.setZero(K);
    dout->d_recon_states.setZero(K, cfg.state_dim);
    dout->d_recon_actions.setZero(K, cfg.action_dim);
    dout->d_q.setZero(K);
  }

  LossSums sums;
  for (int t = 0; t < K; ++t) {
    if (seq.pad[MaskedSequence::slot(t, kReturnSlot)]) continue;

    double rerr = out.recon_returns(t) - seq.returns(t);
    sums.ret += rerr * rerr;
    if (dout) dout->d_recon_returns(t) = 2.0 * rerr * inv_slots;

    Eigen::RowVectorXd serr = out.recon_states.row(t) - seq.states.row(t);
    sums.state += serr.squaredNorm();
    if (dout) dout->d_recon_states.row(t) = 2.0 * serr * inv_slots;

    if (cfg.action_kind == ActionKind::kDiscrete) {
      int idx = static_cast<int>(seq.actions(t, 0));
      Eigen::RowVectorXd logits = out.recon_actions.row(t);
      double mx = logits.maxCoeff();
      Eigen::ArrayXd e = (logits.transpose().array() - mx).exp();
      double z = e.sum();
      sums.action += std::log(z) + mx - logits(idx);
      if (dout) {
        Eigen::ArrayXd probs = e / z;
        probs(idx) -= 1.0;
        dout->d_recon_actions.row(t) = probs.matrix().transpose() * inv_slots;
      }
    } else {
      Eigen::RowVectorXd aerr = out.recon_actions.row(t) - seq.actions.row(t);
      sums.action += aerr.squaredNorm();
      if (dout) dout->d_recon_actions.row(t) = 2.0 * aerr * inv_slots;
    }
  }
  sums.q = q_pair_sum(seq, out, out.q, gamma, nu, inv_pairs, dout ? &dout->d_q : nullptr);
  return sums;
}

ReconLoss recon_loss(const model::ModelConfig& cfg, const MaskedSequence& seq,
                     const model::ModelOutput& out) {
  auto counts = count_loss_targets(seq);
  if (counts.slots == 0.0) throw UsageError("recon_loss: fully padded window");
  auto sums = loss_terms(cfg, seq, out, 1.0, 0.5, 0.0, 0.0, nullptr);
  return {sums.ret / counts.slots, sums.state / counts.slots, sums.action / counts.slots};
}

double q_loss(const MaskedSequence& seq, const model::ModelOutput& out, double gamma,
              double nu) {
  auto counts = count_loss_targets(seq);
  if (counts.pairs == 0.0) return 0.0;
  return q_pair_sum(seq, out, out.q, gamma, nu, 0.0, nullptr) / counts.pairs;
}

}  // namespace doctor::train
