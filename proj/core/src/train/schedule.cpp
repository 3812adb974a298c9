#include "doctor/train/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "doctor/errors.hpp"

namespace doctor::train {

std::vector<bool> make_mask(const std::vector<bool>& pad, double ratio, MaskMode mode,
                            Rng& rng) {
  if (ratio <= 0.0 || ratio > 1.0) throw UsageError("make_mask: ratio must be in (0,1]");
  std::vector<int> non_pad;
  for (std::size_t s = 0; s < pad.size(); ++s) {
    if (!pad[s]) non_pad.push_back(static_cast<int>(s));
  }
  if (non_pad.empty()) throw UsageError("make_mask: fully padded window");
  const int n = static_cast<int>(non_pad.size());
  int m = static_cast<int>(std::llround(ratio * n));
  m = std::clamp(m, 1, n);

  std::vector<bool> mask(pad.size(), false);
  if (mode == MaskMode::kAutoregressive) {
    // Suffix of the real tokens; the final action slot is always inside.
    for (int i = n - m; i < n; ++i) mask[non_pad[i]] = true;
  } else {
    // Partial Fisher-Yates: first m entries become the masked subset.
    for (int i = 0; i < m; ++i) {
      int j = i + static_cast<int>(rng.index(static_cast<std::uint64_t>(n - i)));
      std::swap(non_pad[i], non_pad[j]);
      mask[non_pad[i]] = true;
    }
  }
  return mask;
}

std::pair<double, MaskMode> MaskSchedule::draw(Rng& rng) const {
  if (ratios.empty()) throw UsageError("mask schedule: empty ratio list");
  double ratio = ratios[rng.index(ratios.size())];
  MaskMode mode;
  if (mode_policy == "random") {
    mode = MaskMode::kRandom;
  } else if (mode_policy == "autoregressive") {
    mode = MaskMode::kAutoregressive;
  } else if (mode_policy == "mixed") {
    mode = rng.bernoulli(0.5) ? MaskMode::kAutoregressive : MaskMode::kRandom;
  } else {
    throw UsageError("mask schedule: unknown mode policy '" + mode_policy + "'");
  }
  return {ratio, mode};
}

}  // namespace doctor::train
