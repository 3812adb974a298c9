#include "doctor/model/network.hpp"

#include <cmath>

#include "doctor/errors.hpp"

namespace doctor::model {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kMaskedScore = -1e30;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double trunc_normal(Rng& rng, double stddev) {
  for (;;) {
    double v = rng.normal(0.0, stddev);
    if (std::abs(v) <= 2.0 * stddev) return v;
  }
}

void fill_trunc_normal(Eigen::MatrixXd& m, Rng& rng, double stddev) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = trunc_normal(rng, stddev);
  }
}

// y = x W^T + 1 b^T, rows are tokens.
Eigen::MatrixXd affine_rows(const Eigen::MatrixXd& x, const AffineParam& p) {
  return (x * p.w.transpose()).rowwise() + p.b.col(0).transpose();
}

void affine_rows_backward(const Eigen::MatrixXd& x, const AffineParam& p,
                          const Eigen::MatrixXd& dy, AffineParam& grad,
                          Eigen::MatrixXd* dx) {
  grad.w.noalias() += dy.transpose() * x;
  grad.b.col(0).noalias() += dy.colwise().sum().transpose();
  if (dx) dx->noalias() += dy * p.w;
}

void layer_norm_forward(const Eigen::MatrixXd& x, const LayerNormParam& p,
                        Eigen::MatrixXd& hat, Eigen::VectorXd& inv_std,
                        Eigen::MatrixXd& out) {
  const auto rows = x.rows();
  const auto cols = x.cols();
  hat.resize(rows, cols);
  out.resize(rows, cols);
  inv_std.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    double mean = x.row(r).mean();
    double var = (x.row(r).array() - mean).square().sum() / static_cast<double>(cols);
    double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std(r) = is;
    hat.row(r) = (x.row(r).array() - mean) * is;
    out.row(r) = hat.row(r).array() * p.gamma.col(0).transpose().array() +
                 p.beta.col(0).transpose().array();
  }
}

// Adds into dx; accumulates parameter grads.
void layer_norm_backward(const Eigen::MatrixXd& dy, const Eigen::MatrixXd& hat,
                         const Eigen::VectorXd& inv_std, const LayerNormParam& p,
                         LayerNormParam& grad, Eigen::MatrixXd& dx) {
  const auto rows = dy.rows();
  grad.beta.col(0).noalias() += dy.colwise().sum().transpose();
  grad.gamma.col(0).noalias() += (dy.array() * hat.array()).colwise().sum().transpose().matrix();
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::ArrayXd dhat = dy.row(r).transpose().array() * p.gamma.col(0).array();
    double mean_dhat = dhat.mean();
    double mean_dhat_hat = (dhat * hat.row(r).transpose().array()).mean();
    dx.row(r) += (inv_std(r) *
                  (dhat - mean_dhat - hat.row(r).transpose().array() * mean_dhat_hat))
                     .matrix()
                     .transpose();
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (context_len < 1) throw UsageError("model: context length must be >= 1");
  if (embed_dim < 1 || heads < 1 || embed_dim % heads != 0) {
    throw UsageError("model: embed_dim must be positive and divisible by heads");
  }
  if (enc_layers < 1 || dec_layers < 0) {
    throw UsageError("model: need at least one encoder layer");
  }
  if (q_head_layers != 1 && q_head_layers != 2) {
    throw UsageError("model: q_head_layers must be 1 or 2");
  }
  if (q_head_layers == 2 && q_head_width < 1) {
    throw UsageError("model: q_head_width must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("model: dropout must be in [0,1)");
  if (state_dim < 1 || action_dim < 1) throw UsageError("model: modality dims unset");
}

ModelConfig ModelConfig::from_config(const Config& cfg, const ModalityDims& dims) {
  ModelConfig mc;
  mc.context_len = static_cast<int>(cfg.get_int("model.context_len", mc.context_len));
  mc.embed_dim = static_cast<int>(cfg.get_int("model.embed_dim", mc.embed_dim));
  mc.enc_layers = static_cast<int>(cfg.get_int("model.enc_layers", mc.enc_layers));
  mc.dec_layers = static_cast<int>(cfg.get_int("model.dec_layers", mc.dec_layers));
  mc.heads = static_cast<int>(cfg.get_int("model.heads", mc.heads));
  mc.q_head_layers = static_cast<int>(cfg.get_int("model.q_head_layers", mc.q_head_layers));
  mc.q_head_width = static_cast<int>(cfg.get_int("model.q_head_width", mc.q_head_width));
  mc.dropout = cfg.get_double("model.dropout", mc.dropout);
  mc.action_kind = dims.action_kind;
  mc.state_dim = dims.state_dim;
  mc.action_dim = dims.action_dim;
  mc.validate();
  return mc;
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Eigen::MatrixXd& m) { n += m.size(); });
  return n;
}

void ModelParams::set_zero() {
  visit([](const std::string&, Eigen::MatrixXd& m) { m.setZero(); });
}

ModelParams Network::zeros_like(const ModelConfig& cfg) {
  const int E = cfg.embed_dim;
  const int L = cfg.seq_len();
  const int F = 4 * E;
  const int S = cfg.state_dim;
  const int A = cfg.action_dim;
  ModelParams p;
  auto affine = [](int out, int in) {
    return AffineParam{Eigen::MatrixXd::Zero(out, in), Eigen::MatrixXd::Zero(out, 1)};
  };
  auto norm = [](int dim) {
    return LayerNormParam{Eigen::MatrixXd::Zero(dim, 1), Eigen::MatrixXd::Zero(dim, 1)};
  };
  p.embed_return = affine(E, 1);
  p.embed_state = affine(E, S);
  p.embed_action = affine(E, A);
  p.mask_embed = Eigen::MatrixXd::Zero(E, 1);
  p.pad_embed = Eigen::MatrixXd::Zero(E, 1);
  p.pos = Eigen::MatrixXd::Zero(L, E);
  p.blocks.resize(cfg.n_blocks());
  for (auto& blk : p.blocks) {
    blk.ln1 = norm(E);
    blk.ln2 = norm(E);
    blk.wq = affine(E, E);
    blk.wk = affine(E, E);
    blk.wv = affine(E, E);
    blk.wo = affine(E, E);
    blk.mlp1 = affine(F, E);
    blk.mlp2 = affine(E, F);
  }
  p.ln_final = norm(E);
  p.head_return = affine(1, E);
  p.head_state = affine(S, E);
  p.head_action = affine(A, E);
  p.q_heads.resize(cfg.context_len);
  for (auto& qh : p.q_heads) {
    if (cfg.q_head_layers == 2) {
      qh.h1 = affine(cfg.q_head_width, E);
      qh.h2 = affine(1, cfg.q_head_width);
    } else {
      qh.h1 = affine(1, E);
      qh.h2 = affine(0, 0);
    }
  }
  return p;
}

Network::Network(ModelConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  params_ = zeros_like(cfg_);
}

void Network::init(Rng& rng) {
  constexpr double kStd = 0.02;
  params_.visit([&](const std::string& name, Eigen::MatrixXd& m) {
    if (m.size() == 0) return;
    bool is_bias = name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0;
    bool is_gamma = name.find("gamma") != std::string::npos;
    bool is_beta = name.find("beta") != std::string::npos;
    bool is_final_q = name.find("q_head") != std::string::npos &&
                      (cfg_.q_head_layers == 1 || name.find(".h2.") != std::string::npos);
    if (is_gamma) {
      m.setOnes();
    } else if (is_beta || is_bias || is_final_q) {
      m.setZero();
    } else {
      fill_trunc_normal(m, rng, kStd);
    }
  });
}

Eigen::MatrixXd Network::embed(const MaskedSequence& seq) const {
  const int K = cfg_.context_len;
  const int E = cfg_.embed_dim;
  if (seq.context_len != K) throw UsageError("embed: window length mismatch");
  if (seq.states.cols() != cfg_.state_dim) throw UsageError("embed: state dim mismatch");
  const int act_width = cfg_.action_kind == ActionKind::kDiscrete ? 1 : cfg_.action_dim;
  if (seq.actions.cols() != act_width) throw UsageError("embed: action dim mismatch");

  Eigen::MatrixXd x(seq.seq_len(), E);
  for (int t = 0; t < K; ++t) {
    for (int m = 0; m < 3; ++m) {
      const int s = 3 * t + m;
      if (seq.pad[s]) {
        x.row(s) = params_.pad_embed.col(0).transpose();
      } else if (seq.mask[s]) {
        x.row(s) = params_.mask_embed.col(0).transpose();
      } else if (m == kReturnSlot) {
        x.row(s) = (params_.embed_return.w.col(0) * seq.returns(t) +
                    params_.embed_return.b.col(0)).transpose();
      } else if (m == kStateSlot) {
        x.row(s) = (params_.embed_state.w * seq.states.row(t).transpose() +
                    params_.embed_state.b.col(0)).transpose();
      } else if (cfg_.action_kind == ActionKind::kDiscrete) {
        int idx = static_cast<int>(seq.actions(t, 0));
        if (idx < 0 || idx >= cfg_.action_dim) throw UsageError("embed: action index out of range");
        x.row(s) = (params_.embed_action.w.col(idx) + params_.embed_action.b.col(0)).transpose();
      } else {
        x.row(s) = (params_.embed_action.w * seq.actions.row(t).transpose() +
                    params_.embed_action.b.col(0)).transpose();
      }
    }
  }
  x += params_.pos;
  return x;
}

ModelOutput Network::forward(const MaskedSequence& seq, SeqCache* cache, Rng* dropout_rng) const {
  SeqCache local;
  SeqCache& c = cache ? *cache : local;
  const int K = cfg_.context_len;
  const int L = cfg_.seq_len();
  const int E = cfg_.embed_dim;
  const int H = cfg_.heads;
  const int d = E / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const bool use_dropout = dropout_rng != nullptr && cfg_.dropout > 0.0;
  const double keep_scale = use_dropout ? 1.0 / (1.0 - cfg_.dropout) : 1.0;

  c.embedded = embed(seq);
  c.blocks.resize(cfg_.n_blocks());

  Eigen::MatrixXd x = c.embedded;
  for (int b = 0; b < cfg_.n_blocks(); ++b) {
    BlockCache& bc = c.blocks[b];
    const BlockParam& bp = params_.blocks[b];
    bc.x_in = x;
    layer_norm_forward(x, bp.ln1, bc.ln1_hat, bc.ln1_inv_std, bc.ln1_out);
    bc.q = affine_rows(bc.ln1_out, bp.wq);
    bc.k = affine_rows(bc.ln1_out, bp.wk);
    bc.v = affine_rows(bc.ln1_out, bp.wv);

    bc.attn.resize(H);
    bc.att_concat.resize(L, E);
    for (int h = 0; h < H; ++h) {
      auto qh = bc.q.middleCols(h * d, d);
      auto kh = bc.k.middleCols(h * d, d);
      auto vh = bc.v.middleCols(h * d, d);
      Eigen::MatrixXd scores = qh * kh.transpose() * scale;
      for (int j = 0; j < L; ++j) {
        if (seq.pad[j]) scores.col(j).setConstant(kMaskedScore);
      }
      Eigen::MatrixXd& probs = bc.attn[h];
      probs.resize(L, L);
      for (int r = 0; r < L; ++r) {
        double mx = scores.row(r).maxCoeff();
        Eigen::ArrayXd e = (scores.row(r).transpose().array() - mx).exp();
        probs.row(r) = (e / e.sum()).transpose();
      }
      bc.att_concat.middleCols(h * d, d).noalias() = probs * vh;
    }
    Eigen::MatrixXd att_out = affine_rows(bc.att_concat, bp.wo);
    if (use_dropout) {
      bc.attn_drop.resize(L, E);
      for (Eigen::Index i = 0; i < att_out.size(); ++i) {
        bc.attn_drop(i) = dropout_rng->bernoulli(cfg_.dropout) ? 0.0 : keep_scale;
      }
      att_out.array() *= bc.attn_drop.array();
    } else {
      bc.attn_drop.resize(0, 0);
    }
    bc.x_mid = bc.x_in + att_out;

    layer_norm_forward(bc.x_mid, bp.ln2, bc.ln2_hat, bc.ln2_inv_std, bc.ln2_out);
    bc.mlp_pre = affine_rows(bc.ln2_out, bp.mlp1);
    bc.mlp_act = bc.mlp_pre.unaryExpr([](double v) { return gelu(v); });
    Eigen::MatrixXd mlp_out = affine_rows(bc.mlp_act, bp.mlp2);
    if (use_dropout) {
      bc.mlp_drop.resize(L, E);
      for (Eigen::Index i = 0; i < mlp_out.size(); ++i) {
        bc.mlp_drop(i) = dropout_rng->bernoulli(cfg_.dropout) ? 0.0 : keep_scale;
      }
      mlp_out.array() *= bc.mlp_drop.array();
    } else {
      bc.mlp_drop.resize(0, 0);
    }
    x = bc.x_mid + mlp_out;
  }

  layer_norm_forward(x, params_.ln_final, c.lnf_hat, c.lnf_inv_std, c.z);

  ModelOutput out;
  out.recon_returns.setZero(K);
  out.recon_states.setZero(K, cfg_.state_dim);
  out.recon_actions.setZero(K, cfg_.action_dim);
  out.q.setZero(K);
  if (cfg_.q_head_layers == 2) {
    c.qh_pre.setZero(K, cfg_.q_head_width);
    c.qh_act.setZero(K, cfg_.q_head_width);
  }
  for (int t = 0; t < K; ++t) {
    if (seq.pad[MaskedSequence::slot(t, kReturnSlot)]) continue;
    out.recon_returns(t) = (params_.head_return.w * c.z.row(3 * t).transpose() +
                            params_.head_return.b.col(0))(0);
    out.recon_states.row(t) = (params_.head_state.w * c.z.row(3 * t + 1).transpose() +
                               params_.head_state.b.col(0)).transpose();
    out.recon_actions.row(t) = (params_.head_action.w * c.z.row(3 * t + 2).transpose() +
                                params_.head_action.b.col(0)).transpose();
    const QHeadParam& qh = params_.q_heads[t];
    if (cfg_.q_head_layers == 2) {
      Eigen::VectorXd pre = qh.h1.w * c.z.row(3 * t + 2).transpose() + qh.h1.b.col(0);
      c.qh_pre.row(t) = pre.transpose();
      Eigen::VectorXd act = pre.cwiseMax(0.0);
      c.qh_act.row(t) = act.transpose();
      out.q(t) = (qh.h2.w * act + qh.h2.b.col(0))(0);
    } else {
      out.q(t) = (qh.h1.w * c.z.row(3 * t + 2).transpose() + qh.h1.b.col(0))(0);
    }
  }

  if (!out.recon_returns.allFinite() || !out.recon_states.allFinite() ||
      !out.recon_actions.allFinite() || !out.q.allFinite()) {
    throw NumericError("forward produced non-finite outputs");
  }
  return out;
}

void Network::backward(const MaskedSequence& seq, const SeqCache& c, const OutputGrads& dout,
                       ModelParams& grads) const {
  const int K = cfg_.context_len;
  const int L = cfg_.seq_len();
  const int E = cfg_.embed_dim;
  const int H = cfg_.heads;
  const int d = E / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(L, E);
  for (int t = 0; t < K; ++t) {
    if (seq.pad[MaskedSequence::slot(t, kReturnSlot)]) continue;
    double dr = dout.d_recon_returns(t);
    if (dr != 0.0) {
      grads.head_return.w.row(0).noalias() += dr * c.z.row(3 * t);
      grads.head_return.b(0, 0) += dr;
      dz.row(3 * t).noalias() += dr * params_.head_return.w.row(0);
    }
    Eigen::RowVectorXd ds = dout.d_recon_states.row(t);
    if (!ds.isZero(0.0)) {
      grads.head_state.w.noalias() += ds.transpose() * c.z.row(3 * t + 1);
      grads.head_state.b.col(0).noalias() += ds.transpose();
      dz.row(3 * t + 1).noalias() += ds * params_.head_state.w;
    }
    Eigen::RowVectorXd da = dout.d_recon_actions.row(t);
    if (!da.isZero(0.0)) {
      grads.head_action.w.noalias() += da.transpose() * c.z.row(3 * t + 2);
      grads.head_action.b.col(0).noalias() += da.transpose();
      dz.row(3 * t + 2).noalias() += da * params_.head_action.w;
    }
    double dq = dout.d_q(t);
    if (dq != 0.0) {
      const QHeadParam& qh = params_.q_heads[t];
      QHeadParam& gq = grads.q_heads[t];
      if (cfg_.q_head_layers == 2) {
        Eigen::VectorXd act = c.qh_act.row(t).transpose();
        gq.h2.w.row(0).noalias() += dq * act.transpose();
        gq.h2.b(0, 0) += dq;
        Eigen::VectorXd dact = dq * qh.h2.w.row(0).transpose();
        Eigen::VectorXd dpre =
            (c.qh_pre.row(t).transpose().array() > 0.0).select(dact.array(), 0.0);
        gq.h1.w.noalias() += dpre * c.z.row(3 * t + 2);
        gq.h1.b.col(0).noalias() += dpre;
        dz.row(3 * t + 2).noalias() += dpre.transpose() * qh.h1.w;
      } else {
        gq.h1.w.row(0).noalias() += dq * c.z.row(3 * t + 2);
        gq.h1.b(0, 0) += dq;
        dz.row(3 * t + 2).noalias() += dq * qh.h1.w.row(0);
      }
    }
  }

  // Final layer norm.
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(L, E);
  layer_norm_backward(dz, c.lnf_hat, c.lnf_inv_std, params_.ln_final, grads.ln_final, dx);

  for (int b = cfg_.n_blocks() - 1; b >= 0; --b) {
    const BlockCache& bc = c.blocks[b];
    const BlockParam& bp = params_.blocks[b];
    BlockParam& gb = grads.blocks[b];

    // x_out = x_mid + drop(mlp2(gelu(mlp1(ln2(x_mid)))))
    Eigen::MatrixXd dmlp_out = dx;
    if (bc.mlp_drop.size() > 0) dmlp_out.array() *= bc.mlp_drop.array();
    Eigen::MatrixXd dmlp_act = Eigen::MatrixXd::Zero(L, 4 * E);
    affine_rows_backward(bc.mlp_act, bp.mlp2, dmlp_out, gb.mlp2, &dmlp_act);
    Eigen::MatrixXd dmlp_pre =
        dmlp_act.array() * bc.mlp_pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
    Eigen::MatrixXd dln2 = Eigen::MatrixXd::Zero(L, E);
    affine_rows_backward(bc.ln2_out, bp.mlp1, dmlp_pre, gb.mlp1, &dln2);
    Eigen::MatrixXd dx_mid = dx;  // residual branch
    layer_norm_backward(dln2, bc.ln2_hat, bc.ln2_inv_std, bp.ln2, gb.ln2, dx_mid);

    // x_mid = x_in + drop(wo(attention(ln1(x_in))))
    Eigen::MatrixXd datt_out = dx_mid;
    if (bc.attn_drop.size() > 0) datt_out.array() *= bc.attn_drop.array();
    Eigen::MatrixXd datt_concat = Eigen::MatrixXd::Zero(L, E);
    affine_rows_backward(bc.att_concat, bp.wo, datt_out, gb.wo, &datt_concat);

    Eigen::MatrixXd dq_all(L, E), dk_all(L, E), dv_all(L, E);
    for (int h = 0; h < H; ++h) {
      auto qh = bc.q.middleCols(h * d, d);
      auto kh = bc.k.middleCols(h * d, d);
      auto vh = bc.v.middleCols(h * d, d);
      const Eigen::MatrixXd& probs = bc.attn[h];
      Eigen::MatrixXd da = datt_concat.middleCols(h * d, d);
      Eigen::MatrixXd dprobs = da * vh.transpose();
      dv_all.middleCols(h * d, d).noalias() = probs.transpose() * da;
      Eigen::MatrixXd dscores(L, L);
      for (int r = 0; r < L; ++r) {
        double dot = probs.row(r).dot(dprobs.row(r));
        dscores.row(r) = probs.row(r).array() * (dprobs.row(r).array() - dot);
      }
      dq_all.middleCols(h * d, d).noalias() = dscores * kh * scale;
      dk_all.middleCols(h * d, d).noalias() = dscores.transpose() * qh * scale;
    }
    Eigen::MatrixXd dln1 = Eigen::MatrixXd::Zero(L, E);
    affine_rows_backward(bc.ln1_out, bp.wq, dq_all, gb.wq, &dln1);
    affine_rows_backward(bc.ln1_out, bp.wk, dk_all, gb.wk, &dln1);
    affine_rows_backward(bc.ln1_out, bp.wv, dv_all, gb.wv, &dln1);
    Eigen::MatrixXd dx_in = dx_mid;  // residual branch
    layer_norm_backward(dln1, bc.ln1_hat, bc.ln1_inv_std, bp.ln1, gb.ln1, dx_in);
    dx = dx_in;
  }

  // Embedding/positional backward.
  grads.pos += dx;
  for (int t = 0; t < K; ++t) {
    for (int m = 0; m < 3; ++m) {
      const int s = 3 * t + m;
      Eigen::RowVectorXd row = dx.row(s);
      if (seq.pad[s]) {
        grads.pad_embed.col(0).noalias() += row.transpose();
      } else if (seq.mask[s]) {
        grads.mask_embed.col(0).noalias() += row.transpose();
      } else if (m == kReturnSlot) {
        grads.embed_return.w.col(0).noalias() += row.transpose() * seq.returns(t);
        grads.embed_return.b.col(0).noalias() += row.transpose();
      } else if (m == kStateSlot) {
        grads.embed_state.w.noalias() += row.transpose() * seq.states.row(t);
        grads.embed_state.b.col(0).noalias() += row.transpose();
      } else if (cfg_.action_kind == ActionKind::kDiscrete) {
        int idx = static_cast<int>(seq.actions(t, 0));
        grads.embed_action.w.col(idx).noalias() += row.transpose();
        grads.embed_action.b.col(0).noalias() += row.transpose();
      } else {
        grads.embed_action.w.noalias() += row.transpose() * seq.actions.row(t);
        grads.embed_action.b.col(0).noalias() += row.transpose();
      }
    }
  }
}

double q_value(const ModelOutput& out, const MaskedSequence& seq, int t) {
  if (t < 0 || t >= seq.context_len) throw UsageError("q_value: timestep out of range");
  if (seq.pad[MaskedSequence::slot(t, kReturnSlot)]) {
    throw UsageError("q_value: timestep " + std::to_string(t) + " is a pad slot");
  }
  return out.q(t);
}

}  // namespace doctor::model
