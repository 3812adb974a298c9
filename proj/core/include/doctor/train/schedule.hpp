#pragma once

#include <string>
#include <vector>

#include "doctor/rng.hpp"

namespace doctor::train {

enum class MaskMode { kRandom, kAutoregressive };

// Masks a fraction of the non-pad slots equal to `ratio` (rounded, at
// least one slot). Random mode picks a uniform subset; autoregressive
// mode masks a suffix, which always covers the final action slot.
std::vector<bool> make_mask(const std::vector<bool>& pad, double ratio, MaskMode mode,
                            Rng& rng);

// Per-batch draw of (ratio, mode). mode_policy: "mixed" flips a fair coin
// between random and autoregressive; "random"/"autoregressive" pin it.
struct MaskSchedule {
  std::vector<double> ratios = {0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 1.0};
  std::string mode_policy = "mixed";

  std::pair<double, MaskMode> draw(Rng& rng) const;
};

}  // namespace doctor::train
