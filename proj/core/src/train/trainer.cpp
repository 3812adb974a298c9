#include "doctor/train/trainer.hpp"

#include <cmath>
#include <sstream>

#include "doctor/errors.hpp"
#include "doctor/model/checkpoint.hpp"
#include "doctor/numeric.hpp"

namespace doctor::train {

void TrainConfig::validate() const {
  if (nu <= 0.0 || nu >= 1.0) throw UsageError("train: nu must be in (0,1)");
  if (gamma < 0.0 || gamma > 1.0) throw UsageError("train: gamma outside [0,1]");
  if (warmup_steps > total_steps) throw UsageError("train: warmup exceeds total steps");
  if (batch_size < 1 || total_steps < 0) throw UsageError("train: bad step/batch settings");
}

TrainConfig TrainConfig::from_config(const Config& cfg, double dataset_gamma) {
  TrainConfig tc;
  tc.nu = cfg.get_double("train.nu", tc.nu);
  tc.gamma = cfg.get_double("train.gamma", dataset_gamma);
  tc.lr = cfg.get_double("train.lr", tc.lr);
  tc.weight_decay = cfg.get_double("train.weight_decay", tc.weight_decay);
  tc.warmup_steps = static_cast<int>(cfg.get_int("train.warmup_steps", tc.warmup_steps));
  tc.total_steps = static_cast<int>(cfg.get_int("train.total_steps", tc.total_steps));
  tc.batch_size = static_cast<int>(cfg.get_int("train.batch_size", tc.batch_size));
  tc.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 0));
  tc.log_every = static_cast<int>(cfg.get_int("train.log_every", tc.log_every));
  tc.checkpoint_every = static_cast<int>(cfg.get_int("train.checkpoint_every", 0));
  tc.schedule.mode_policy = cfg.get_str("train.mask_mode", "mixed");
  if (cfg.has("train.mask_ratios")) {
    tc.schedule.ratios.clear();
    std::istringstream in(cfg.get_str("train.mask_ratios", ""));
    std::string tok;
    while (std::getline(in, tok, ',')) tc.schedule.ratios.push_back(parse_double(tok));
  }
  tc.validate();
  return tc;
}

Trainer::Trainer(model::Network& net, const Dataset& ds, TrainConfig tc)
    : net_(net),
      ds_(ds),
      tc_(tc),
      grads_(model::Network::zeros_like(net.config())),
      adam_m_(model::Network::zeros_like(net.config())),
      adam_v_(model::Network::zeros_like(net.config())),
      rng_(tc.seed) {
  tc_.validate();
  if (ds_.trajectories.empty()) throw UsageError("train: empty dataset");
}

double Trainer::learning_rate_at(int step) const {
  if (tc_.warmup_steps > 0 && step < tc_.warmup_steps) {
    return tc_.lr * static_cast<double>(step + 1) / tc_.warmup_steps;
  }
  return tc_.lr;
}

std::vector<model::MaskedSequence> Trainer::assemble_batch() {
  auto [ratio, mode] = tc_.schedule.draw(rng_);
  std::vector<model::MaskedSequence> batch;
  batch.reserve(tc_.batch_size);
  const int K = net_.config().context_len;
  for (int i = 0; i < tc_.batch_size; ++i) {
    const auto& traj = ds_.trajectories[rng_.index(ds_.size())];
    auto window = sample_subtrajectory(traj, K, rng_);
    std::vector<bool> pad3(3 * K);
    for (int t = 0; t < K; ++t) {
      for (int m = 0; m < 3; ++m) pad3[3 * t + m] = window.pad[t];
    }
    auto mask = make_mask(pad3, ratio, mode, rng_);
    batch.push_back(model::from_window(window, ds_.dims, mask));
  }
  return batch;
}

LossBreakdown Trainer::step_on_batch(const std::vector<model::MaskedSequence>& batch) {
  if (batch.empty()) throw UsageError("train: empty batch");
  LossCounts counts;
  for (const auto& seq : batch) {
    auto c = count_loss_targets(seq);
    counts.slots += c.slots;
    counts.pairs += c.pairs;
  }
  const double inv_slots = counts.slots > 0.0 ? 1.0 / counts.slots : 0.0;
  const double inv_pairs = counts.pairs > 0.0 ? 1.0 / counts.pairs : 0.0;

  grads_.set_zero();
  LossSums sums;
  model::OutputGrads dout;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& seq = batch[i];
    model::ModelOutput out;
    try {
      out = net_.forward(seq, &cache_, net_.config().dropout > 0.0 ? &rng_ : nullptr);
    } catch (const NumericError& e) {
      throw NumericError("train step " + std::to_string(step_) + ", batch index " +
                         std::to_string(i) + ": " + e.what());
    }
    auto s = loss_terms(net_.config(), seq, out, tc_.gamma, tc_.nu, inv_slots, inv_pairs, &dout);
    sums.ret += s.ret;
    sums.state += s.state;
    sums.action += s.action;
    sums.q += s.q;
    net_.backward(seq, cache_, dout, grads_);
  }

  LossBreakdown breakdown;
  breakdown.recon_return = sums.ret * inv_slots;
  breakdown.recon_state = sums.state * inv_slots;
  breakdown.recon_action = sums.action * inv_slots;
  breakdown.q_loss = sums.q * inv_pairs;
  breakdown.total = breakdown.recon_return + breakdown.recon_state + breakdown.recon_action +
                    breakdown.q_loss;
  if (!is_finite(breakdown.total)) {
    throw NumericError("train: non-finite loss at step " + std::to_string(step_) +
                       " (recon_return=" + format_double(breakdown.recon_return) +
                       ", recon_state=" + format_double(breakdown.recon_state) +
                       ", recon_action=" + format_double(breakdown.recon_action) +
                       ", q_loss=" + format_double(breakdown.q_loss) + ")");
  }

  apply_adamw();
  ++step_;
  return breakdown;
}

LossBreakdown Trainer::step() { return step_on_batch(assemble_batch()); }

void Trainer::apply_adamw() {
  const double lr = learning_rate_at(step_);
  const double beta1 = 0.9;
  const double beta2 = 0.999;
  const double eps = 1e-8;
  const double t = static_cast<double>(step_ + 1);
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);

  // Walk params/grads/moments in lockstep; visit order is fixed.
  std::vector<Eigen::MatrixXd*> ps, gs, ms, vs;
  std::vector<std::string> names;
  net_.params().visit([&](const std::string& n, Eigen::MatrixXd& m) {
    names.push_back(n);
    ps.push_back(&m);
  });
  grads_.visit([&](const std::string&, Eigen::MatrixXd& m) { gs.push_back(&m); });
  adam_m_.visit([&](const std::string&, Eigen::MatrixXd& m) { ms.push_back(&m); });
  adam_v_.visit([&](const std::string&, Eigen::MatrixXd& m) { vs.push_back(&m); });

  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i]->size() == 0) continue;
    auto& p = *ps[i];
    auto& g = *gs[i];
    auto& m = *ms[i];
    auto& v = *vs[i];
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    Eigen::ArrayXXd update = (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    // Decoupled decay on affine weight matrices only.
    bool decay = names[i].size() >= 2 &&
                 names[i].compare(names[i].size() - 2, 2, ".w") == 0;
    if (decay && tc_.weight_decay > 0.0) update += tc_.weight_decay * p.array();
    p.array() -= lr * update;
  }
}

void Trainer::run(std::ostream* metrics, const std::string& checkpoint_path) {
  for (int s = 0; s < tc_.total_steps; ++s) {
    auto breakdown = step();
    bool log_now = metrics && tc_.log_every > 0 &&
                   (step_ % tc_.log_every == 0 || step_ == tc_.total_steps);
    if (log_now) {
      (*metrics) << "{\"step\":" << step_;
      (*metrics) << ",\"recon_return\":" << format_double(breakdown.recon_return);
      (*metrics) << ",\"recon_state\":" << format_double(breakdown.recon_state);
      (*metrics) << ",\"recon_action\":" << format_double(breakdown.recon_action);
      (*metrics) << ",\"q_loss\":" << format_double(breakdown.q_loss);
      (*metrics) << ",\"total\":" << format_double(breakdown.total);
      (*metrics) << ",\"lr\":" << format_double(learning_rate_at(step_ - 1)) << "}\n";
    }
    if (!checkpoint_path.empty() && tc_.checkpoint_every > 0 &&
        step_ % tc_.checkpoint_every == 0 && step_ != tc_.total_steps) {
      model::save_checkpoint(net_, step_, tc_.seed,
                             checkpoint_path + ".step" + std::to_string(step_));
    }
  }
  if (!checkpoint_path.empty()) {
    model::save_checkpoint(net_, step_, tc_.seed, checkpoint_path);
  }
}

}  // namespace doctor::train
