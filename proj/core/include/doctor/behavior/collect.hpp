#pragma once

#include <cstdint>
#include <string>

#include "doctor/config.hpp"
#include "doctor/dataset.hpp"

namespace doctor::behavior {

// Rolls out n_episodes full episodes under policy.kind from the config.
// Episode e uses the derived seed (seed + e) with a fresh env and policy
// instance, so sharding across workers cannot change the result.
Dataset collect_dataset(const std::string& env_id, const std::string& policy_kind,
                        std::size_t n_episodes, double gamma, std::uint64_t seed,
                        const Config& cfg, int threads = 1);

// Removes the top percent% of trajectories ranked by returns[0]
// (ceil(percent*n/100) removed, rank ties broken by original index) and
// recomputes r_max. 0 <= percent < 100.
Dataset filter_top_returns(const Dataset& ds, double percent);

// Retains the top percent% plus every trajectory tied with the boundary
// return; recomputes r_max. 0 < percent <= 100.
Dataset keep_top_returns(const Dataset& ds, double percent);

}  // namespace doctor::behavior
