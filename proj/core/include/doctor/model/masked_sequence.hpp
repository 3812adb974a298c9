#pragma once

#include <vector>

#include <Eigen/Dense>

#include "doctor/dataset.hpp"
#include "doctor/trajectory.hpp"

namespace doctor::model {

// Slot layout within a timestep.
enum Modality : int { kReturnSlot = 0, kStateSlot = 1, kActionSlot = 2 };

// A length-K window as 3K tokens (return, state, action per timestep)
// with per-slot mask and pad flags. Original values stay around as loss
// targets; the forward pass may only read values at unmasked non-pad
// slots.
struct MaskedSequence {
  int context_len = 0;
  Eigen::VectorXd returns;    // K
  Eigen::MatrixXd states;     // K x state_dim
  Eigen::MatrixXd actions;    // K x action_width (index column when discrete)
  Eigen::VectorXd rewards;    // K
  std::vector<bool> mask;     // 3K
  std::vector<bool> pad;      // 3K
  std::vector<bool> terminal; // K

  static int slot(int t, Modality m) { return 3 * t + static_cast<int>(m); }
  int seq_len() const { return 3 * context_len; }
  bool readable(int s) const { return !mask[s] && !pad[s]; }
  int non_pad_slots() const;
};

// Lifts a sampled window into token form; mask covers the 3K slots and is
// ignored on pads.
MaskedSequence from_window(const SubTrajectory& window, const ModalityDims& dims,
                           const std::vector<bool>& mask);

}  // namespace doctor::model
