#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "doctor/config.hpp"
#include "doctor/dataset.hpp"
#include "doctor/model/network.hpp"
#include "doctor/train/losses.hpp"
#include "doctor/train/schedule.hpp"

namespace doctor::train {

struct TrainConfig {
  double nu = 0.7;
  double gamma = 1.0;
  double lr = 1e-4;
  double weight_decay = 0.005;
  int warmup_steps = 2000;
  int total_steps = 50000;
  int batch_size = 256;
  std::uint64_t seed = 0;
  MaskSchedule schedule;
  int log_every = 100;
  int checkpoint_every = 0;  // 0: final checkpoint only

  void validate() const;
  // train.* keys; gamma falls back to the dataset's.
  static TrainConfig from_config(const Config& cfg, double dataset_gamma);
};

// Single-writer joint optimization of the reconstruction and expectile TD
// losses with AdamW (decoupled decay on affine weight matrices), linear
// warmup then constant rate. Deterministic given (seed, data, config).
class Trainer {
 public:
  Trainer(model::Network& net, const Dataset& ds, TrainConfig tc);

  // One gradient step on a freshly assembled batch.
  LossBreakdown step();

  // Per-batch windows are exposed so tests can drive fixed batches.
  std::vector<model::MaskedSequence> assemble_batch();
  LossBreakdown step_on_batch(const std::vector<model::MaskedSequence>& batch);

  // Full run; metrics is an optional step-indexed structured log.
  void run(std::ostream* metrics, const std::string& checkpoint_path = "");

  double learning_rate_at(int step) const;
  int step_count() const { return step_; }
  const TrainConfig& config() const { return tc_; }

 private:
  void apply_adamw();

  model::Network& net_;
  const Dataset& ds_;
  TrainConfig tc_;
  model::ModelParams grads_, adam_m_, adam_v_;
  Rng rng_;
  model::SeqCache cache_;
  int step_ = 0;
};

}  // namespace doctor::train
