#pragma once

#include <string>
#include <vector>

#include "doctor/trajectory.hpp"

namespace doctor {

enum class ActionKind { kContinuous, kDiscrete };

std::string to_string(ActionKind kind);
ActionKind action_kind_from_string(const std::string& s);

struct ModalityDims {
  int state_dim = 0;
  // Vector width for continuous actions, action count for discrete ones.
  int action_dim = 0;
  ActionKind action_kind = ActionKind::kContinuous;
};

// Offline dataset: trajectories plus the metadata every consumer needs
// (gamma for the return recursion, r_max as the anchor for delta and
// target fractions).
struct Dataset {
  double gamma = 1.0;
  std::string env_id;
  ModalityDims dims;
  std::vector<Trajectory> trajectories;
  // Maximum returns[0] over trajectories; fixed at build time so that
  // derived quantities stay stable across runs.
  double r_max = 0.0;

  std::size_t size() const { return trajectories.size(); }
};

// Recomputes r_max from the stored trajectories (0 for an empty dataset).
double max_initial_return(const Dataset& ds);

// Checks dimensions, the return recursion and the stored r_max.
// Throws UsageError with the offending trajectory index.
void validate_dataset(const Dataset& ds);

// Line-delimited text: one header record, then one trajectory record per
// line. Returns are recomputed on load and verified; numbers round-trip
// bit-exactly.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace doctor
