#pragma once

#include <memory>
#include <string>
#include <vector>

#include "doctor/config.hpp"
#include "doctor/dataset.hpp"
#include "doctor/rng.hpp"

namespace doctor::envs {

enum class TerminalKind { kNone = 0, kRemission = 1, kAdverse = 2, kHorizon = 3 };

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  TerminalKind terminal = TerminalKind::kNone;
};

// Environments own mutable episode state and are single-threaded;
// parallel rollouts use independent instances with independent rngs.
class Env {
 public:
  virtual ~Env() = default;

  virtual std::string env_id() const = 0;
  virtual ModalityDims dims() const = 0;
  virtual int max_episode_steps() const = 0;

  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual StepResult step(const std::vector<double>& action, Rng& rng) = 0;
};

// env_id: "dial" | "maze" | "treatment:<seed>" | "chain".
// Parameters come from env.* config keys where the id leaves them open.
std::unique_ptr<Env> make_env(const std::string& env_id, const Config& cfg);

// Env specs round-trip through the same structured-text container as
// datasets (spec_version field in the header).
void save_env_spec(const Env& env, const std::string& path);
std::unique_ptr<Env> load_env_spec(const std::string& path);

}  // namespace doctor::envs
