#pragma once

#include <cstddef>
#include <vector>

#include "doctor/rng.hpp"

namespace doctor {

// One episode: aligned states, actions, rewards and returns-to-go.
// Discrete actions are stored as a single index per step; continuous
// actions as fixed-width vectors.
struct Trajectory {
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> actions;
  std::vector<double> rewards;
  std::vector<double> returns;

  std::size_t horizon() const { return rewards.size(); }
};

// A length-K window: triples (return, state, action) plus rewards and
// terminal flags, left-padded when the episode prefix is shorter than K.
struct SubTrajectory {
  int context_len = 0;
  std::size_t start = 0;  // index of the first real step in the source trajectory
  std::vector<double> returns;               // K
  std::vector<std::vector<double>> states;   // K
  std::vector<std::vector<double>> actions;  // K
  std::vector<double> rewards;               // K
  std::vector<bool> pad;                     // K, true on padded prefix slots
  std::vector<bool> terminal;                // K, true on the episode's final step
};

// Discounted returns-to-go: output[t] = sum_{i>=t} gamma^{i-t} rewards[i].
std::vector<double> compute_returns(const std::vector<double>& rewards, double gamma);

// Inverts the return recursion one step: (R_t - r_t) / gamma.
double update_target_return(double target_return, double reward, double gamma);

// Window of length K ending at a uniformly chosen timestep, prefix-padded
// when it would run past the episode start.
SubTrajectory sample_subtrajectory(const Trajectory& traj, int context_len, Rng& rng);

// Same window construction with a fixed end index (used by rollouts and tests).
SubTrajectory window_ending_at(const Trajectory& traj, int context_len, std::size_t end);

}  // namespace doctor
