#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doctor/model/masked_sequence.hpp"
#include "doctor/model/model_config.hpp"
#include "doctor/rng.hpp"

namespace doctor::model {

struct AffineParam {
  Eigen::MatrixXd w;  // out x in
  Eigen::MatrixXd b;  // out x 1
};

struct LayerNormParam {
  Eigen::MatrixXd gamma;  // dim x 1
  Eigen::MatrixXd beta;   // dim x 1
};

struct BlockParam {
  LayerNormParam ln1, ln2;
  AffineParam wq, wk, wv, wo;
  AffineParam mlp1, mlp2;
};

struct QHeadParam {
  AffineParam h1;  // hidden x embed (or 1 x embed for 1-layer heads)
  AffineParam h2;  // 1 x hidden (unused for 1-layer heads)
};

// All learnable tensors. Gradients and optimizer moments reuse this type
// with identical shapes; visit() fixes the tensor order for the
// optimizer, checkpoints and the finite-difference check.
struct ModelParams {
  AffineParam embed_return, embed_state, embed_action;
  Eigen::MatrixXd mask_embed, pad_embed;  // embed x 1
  Eigen::MatrixXd pos;                    // 3K x embed
  std::vector<BlockParam> blocks;
  LayerNormParam ln_final;
  AffineParam head_return, head_state, head_action;
  std::vector<QHeadParam> q_heads;  // one per window timestep

  template <class Self, class Fn>
  static void visit_impl(Self& self, Fn&& fn);
  template <class Fn>
  void visit(Fn&& fn) { visit_impl(*this, fn); }
  template <class Fn>
  void visit(Fn&& fn) const { visit_impl(*this, fn); }

  std::size_t scalar_count() const;
  void set_zero();
};

// Per-timestep reconstructions and action-value estimates.
struct ModelOutput {
  Eigen::VectorXd recon_returns;  // K
  Eigen::MatrixXd recon_states;   // K x state_dim
  Eigen::MatrixXd recon_actions;  // K x action_dim (point prediction or logits)
  Eigen::VectorXd q;              // K
};

// Upstream gradients of a scalar loss w.r.t. every model output.
struct OutputGrads {
  Eigen::VectorXd d_recon_returns;
  Eigen::MatrixXd d_recon_states;
  Eigen::MatrixXd d_recon_actions;
  Eigen::VectorXd d_q;
};

struct BlockCache {
  Eigen::MatrixXd x_in, ln1_hat, ln1_out;
  Eigen::VectorXd ln1_inv_std;
  Eigen::MatrixXd q, k, v;
  std::vector<Eigen::MatrixXd> attn;  // per head, L x L
  Eigen::MatrixXd att_concat;
  Eigen::MatrixXd attn_drop, mlp_drop;  // kept/scale masks (empty in eval mode)
  Eigen::MatrixXd x_mid, ln2_hat, ln2_out;
  Eigen::VectorXd ln2_inv_std;
  Eigen::MatrixXd mlp_pre, mlp_act;
};

struct SeqCache {
  Eigen::MatrixXd embedded;
  std::vector<BlockCache> blocks;
  Eigen::MatrixXd lnf_hat;
  Eigen::VectorXd lnf_inv_std;
  Eigen::MatrixXd z;           // 3K x embed, final latent
  Eigen::MatrixXd qh_pre;      // K x width (2-layer q heads)
  Eigen::MatrixXd qh_act;      // K x width
};

// Bidirectional encoder-decoder over (return, state, action) tokens with
// per-modality reconstruction heads and an individual Q head per window
// timestep reading the latent at that timestep's action slot. Pad slots
// are excluded from attention; masked slots contribute only the shared
// mask embedding plus positional encoding.
class Network {
 public:
  explicit Network(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  void init(Rng& rng);

  // Token embeddings after modality projection / mask / pad resolution
  // and positional encoding, one row per slot.
  Eigen::MatrixXd embed(const MaskedSequence& seq) const;

  // Evaluation-mode forward is a pure function of (seq, params);
  // dropout_rng enables train-mode dropout. The cache is reusable across
  // calls of the same shape.
  ModelOutput forward(const MaskedSequence& seq, SeqCache* cache = nullptr,
                      Rng* dropout_rng = nullptr) const;

  // Accumulates parameter gradients for the forward pass recorded in
  // cache; dout carries the loss gradient w.r.t. each output.
  void backward(const MaskedSequence& seq, const SeqCache& cache, const OutputGrads& dout,
                ModelParams& grads) const;

  static ModelParams zeros_like(const ModelConfig& cfg);

 private:
  ModelConfig cfg_;
  ModelParams params_;
};

// Action-value accessor; pad slots are an error.
double q_value(const ModelOutput& out, const MaskedSequence& seq, int t);

template <class Self, class Fn>
void ModelParams::visit_impl(Self& self, Fn&& fn) {
  fn("embed_return.w", self.embed_return.w);
  fn("embed_return.b", self.embed_return.b);
  fn("embed_state.w", self.embed_state.w);
  fn("embed_state.b", self.embed_state.b);
  fn("embed_action.w", self.embed_action.w);
  fn("embed_action.b", self.embed_action.b);
  fn("mask_embed", self.mask_embed);
  fn("pad_embed", self.pad_embed);
  fn("pos", self.pos);
  for (std::size_t i = 0; i < self.blocks.size(); ++i) {
    auto& blk = self.blocks[i];
    const std::string p = "block" + std::to_string(i) + ".";
    fn(p + "ln1.gamma", blk.ln1.gamma);
    fn(p + "ln1.beta", blk.ln1.beta);
    fn(p + "wq.w", blk.wq.w);
    fn(p + "wq.b", blk.wq.b);
    fn(p + "wk.w", blk.wk.w);
    fn(p + "wk.b", blk.wk.b);
    fn(p + "wv.w", blk.wv.w);
    fn(p + "wv.b", blk.wv.b);
    fn(p + "wo.w", blk.wo.w);
    fn(p + "wo.b", blk.wo.b);
    fn(p + "ln2.gamma", blk.ln2.gamma);
    fn(p + "ln2.beta", blk.ln2.beta);
    fn(p + "mlp1.w", blk.mlp1.w);
    fn(p + "mlp1.b", blk.mlp1.b);
    fn(p + "mlp2.w", blk.mlp2.w);
    fn(p + "mlp2.b", blk.mlp2.b);
  }
  fn("ln_final.gamma", self.ln_final.gamma);
  fn("ln_final.beta", self.ln_final.beta);
  fn("head_return.w", self.head_return.w);
  fn("head_return.b", self.head_return.b);
  fn("head_state.w", self.head_state.w);
  fn("head_state.b", self.head_state.b);
  fn("head_action.w", self.head_action.w);
  fn("head_action.b", self.head_action.b);
  for (std::size_t i = 0; i < self.q_heads.size(); ++i) {
    auto& qh = self.q_heads[i];
    const std::string p = "q_head" + std::to_string(i) + ".";
    fn(p + "h1.w", qh.h1.w);
    fn(p + "h1.b", qh.h1.b);
    fn(p + "h2.w", qh.h2.w);
    fn(p + "h2.b", qh.h2.b);
  }
}

}  // namespace doctor::model
