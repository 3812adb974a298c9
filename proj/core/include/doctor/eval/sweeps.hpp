#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "doctor/config.hpp"
#include "doctor/dataset.hpp"
#include "doctor/eval/metrics.hpp"
#include "doctor/infer/infer.hpp"
#include "doctor/model/network.hpp"

namespace doctor::eval {

// Aligned rollouts for each target; episode e of target index ti runs
// with derived seed base + ti*episodes + e, so sweeps parallelize without
// changing results.
AlignmentReport alignment_sweep(const model::Network& net, const std::string& env_id,
                                const Config& env_cfg, const std::vector<double>& targets,
                                int episodes_per_target, const infer::InferConfig& base,
                                int threads, double r_max);

// Mean absolute error over a target grid (the Table-2-style scalar).
double mean_abs_error_over_targets(const model::Network& net, const std::string& env_id,
                                   const Config& env_cfg, const std::vector<double>& targets,
                                   int episodes_per_target, const infer::InferConfig& base,
                                   int threads);

// Candidate-count sweep at a fixed target.
std::vector<AblationRow> ablation_n(const model::Network& net, const std::string& env_id,
                                    const Config& env_cfg, const std::vector<int>& n_list,
                                    double target, int episodes, const infer::InferConfig& base,
                                    int threads);

// Trains a model on the dataset with the given mask-mode policy.
model::Network train_model(const Dataset& ds, const Config& cfg, std::uint64_t seed,
                           const std::string& mask_mode);

// Full vs w/o RM (autoregressive-only masking) vs w/o DB (conditioning-
// only inference on the full checkpoint); per-seed errors averaged over
// the grid of 9 targets spanning 0.1..1.0 of r_max.
std::vector<AblationRow> ablation_components(const Dataset& ds, const Config& cfg,
                                             const std::vector<std::uint64_t>& seeds);

// Aligned episodes at target_fraction * r_max with outcome counting.
SafetyReport safety_eval(const model::Network& net, const std::string& env_id,
                         const Config& env_cfg, double target_fraction, double r_max,
                         int episodes, const infer::InferConfig& base, int threads);

}  // namespace doctor::eval
