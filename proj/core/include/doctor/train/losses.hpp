#pragma once

#include "doctor/model/network.hpp"

namespace doctor::train {

// Asymmetric least squares weight |nu - 1(u<0)|; the loss term is
// weight * u^2. nu=0.5 recovers half the squared error.
double expectile_weight(double u, double nu);

struct ReconLoss {
  double ret = 0.0;
  double state = 0.0;
  double action = 0.0;
};

// Per-window mean reconstruction NLL over non-pad slots (squared error
// for continuous modalities, categorical NLL for discrete actions).
ReconLoss recon_loss(const model::ModelConfig& cfg, const model::MaskedSequence& seq,
                     const model::ModelOutput& out);

// Per-window mean expectile TD loss over valid pairs. The bootstrap
// q_{t+1} is the dataset-action value and carries no gradient; terminal
// steps use a zero bootstrap.
double q_loss(const model::MaskedSequence& seq, const model::ModelOutput& out, double gamma,
              double nu);

struct LossBreakdown {
  double recon_return = 0.0;
  double recon_state = 0.0;
  double recon_action = 0.0;
  double q_loss = 0.0;
  double total = 0.0;
};

// Batch bookkeeping: totals are means over all non-pad slots (recon) and
// all valid TD pairs (q) across the whole batch.
struct LossCounts {
  double slots = 0.0;
  double pairs = 0.0;
};

LossCounts count_loss_targets(const model::MaskedSequence& seq);

struct LossSums {
  double ret = 0.0;
  double state = 0.0;
  double action = 0.0;
  double q = 0.0;
};

// Unnormalized per-window loss sums; when dout is non-null also writes
// the gradient of (sums scaled by the given inverse counts) w.r.t. the
// model outputs.
LossSums loss_terms(const model::ModelConfig& cfg, const model::MaskedSequence& seq,
                    const model::ModelOutput& out, double gamma, double nu,
                    double inv_slots, double inv_pairs, model::OutputGrads* dout);

// TD term sum with the bootstrap frozen to a snapshot of q. The
// finite-difference check differentiates this objective, matching the
// semi-gradient backward.
double q_pair_sum_frozen(const model::MaskedSequence& seq, const model::ModelOutput& out,
                         const Eigen::VectorXd& frozen_q, double gamma, double nu);

}  // namespace doctor::train
