#pragma once

#include <cstdint>
#include <string>

#include "doctor/model/network.hpp"

namespace doctor::model {

// Checkpoint file: header (config, training step, seed) followed by one
// named flat tensor per line, same structured-text container as datasets.
void save_checkpoint(const Network& net, std::int64_t step, std::uint64_t seed,
                     const std::string& path);

struct LoadedCheckpoint {
  Network net;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
};

// Loads and validates every tensor's shape against the stored config.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace doctor::model
