#include "doctor/model/masked_sequence.hpp"

#include "doctor/errors.hpp"

namespace doctor::model {

int MaskedSequence::non_pad_slots() const {
  int n = 0;
  for (bool p : pad) n += p ? 0 : 1;
  return n;
}

MaskedSequence from_window(const SubTrajectory& window, const ModalityDims& dims,
                           const std::vector<bool>& mask) {
  const int K = window.context_len;
  if (static_cast<int>(mask.size()) != 3 * K) {
    throw UsageError("from_window: mask length must be 3K");
  }
  const int act_width = dims.action_kind == ActionKind::kDiscrete ? 1 : dims.action_dim;

  MaskedSequence seq;
  seq.context_len = K;
  seq.returns.setZero(K);
  seq.states.setZero(K, dims.state_dim);
  seq.actions.setZero(K, act_width);
  seq.rewards.setZero(K);
  seq.mask.assign(3 * K, false);
  seq.pad.assign(3 * K, false);
  seq.terminal = window.terminal;

  for (int t = 0; t < K; ++t) {
    if (window.pad[t]) {
      for (int m = 0; m < 3; ++m) seq.pad[3 * t + m] = true;
      continue;
    }
    seq.returns(t) = window.returns[t];
    for (int d = 0; d < dims.state_dim; ++d) seq.states(t, d) = window.states[t][d];
    for (int d = 0; d < act_width; ++d) seq.actions(t, d) = window.actions[t][d];
    seq.rewards(t) = window.rewards[t];
    for (int m = 0; m < 3; ++m) seq.mask[3 * t + m] = mask[3 * t + m];
  }
  return seq;
}

}  // namespace doctor::model
