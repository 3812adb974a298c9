#pragma once

#include "doctor/config.hpp"
#include "doctor/dataset.hpp"

namespace doctor::model {

struct ModelConfig {
  int context_len = 4;  // K
  int embed_dim = 64;
  int enc_layers = 2;
  int dec_layers = 1;
  int heads = 4;
  int q_head_layers = 2;
  int q_head_width = 64;
  double dropout = 0.1;
  ActionKind action_kind = ActionKind::kContinuous;
  int state_dim = 0;
  int action_dim = 0;

  int seq_len() const { return 3 * context_len; }
  int n_blocks() const { return enc_layers + dec_layers; }
  int action_width() const { return action_kind == ActionKind::kDiscrete ? 1 : action_dim; }

  void validate() const;

  // model.* keys override the desk-scale defaults; modality fields come
  // from the dataset.
  static ModelConfig from_config(const Config& cfg, const ModalityDims& dims);
};

}  // namespace doctor::model
