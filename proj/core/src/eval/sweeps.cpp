#include "doctor/eval/sweeps.hpp"

#include "doctor/errors.hpp"
#include "doctor/parallel.hpp"
#include "doctor/train/trainer.hpp"

namespace doctor::eval {

namespace {

struct EpisodeStats {
  double achieved = 0.0;
  envs::TerminalKind outcome = envs::TerminalKind::kNone;
};

// One slot per (target, episode) pair, filled independently.
std::vector<EpisodeStats> run_grid(const model::Network& net, const std::string& env_id,
                                   const Config& env_cfg, const std::vector<double>& targets,
                                   int episodes, const infer::InferConfig& base, int threads) {
  std::vector<EpisodeStats> stats(targets.size() * static_cast<std::size_t>(episodes));
  parallel_for(stats.size(), threads, [&](std::size_t idx) {
    const std::size_t ti = idx / static_cast<std::size_t>(episodes);
    auto env = envs::make_env(env_id, env_cfg);
    infer::InferConfig cfg = base;
    cfg.seed = derive_seed(base.seed, idx);
    auto rollout = infer::rollout_aligned(*env, net, targets[ti], cfg);
    stats[idx] = {rollout.achieved_return, rollout.outcome};
  });
  return stats;
}

}  // namespace

AlignmentReport alignment_sweep(const model::Network& net, const std::string& env_id,
                                const Config& env_cfg, const std::vector<double>& targets,
                                int episodes_per_target, const infer::InferConfig& base,
                                int threads, double r_max) {
  if (targets.empty()) throw UsageError("alignment_sweep: empty target grid");
  if (episodes_per_target < 1) throw UsageError("alignment_sweep: episodes must be >= 1");
  auto stats = run_grid(net, env_id, env_cfg, targets, episodes_per_target, base, threads);

  AlignmentReport report;
  report.r_max = r_max;
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    std::vector<double> achieved(episodes_per_target);
    std::vector<double> errors(episodes_per_target);
    for (int e = 0; e < episodes_per_target; ++e) {
      const auto& s = stats[ti * episodes_per_target + e];
      achieved[e] = s.achieved;
      errors[e] = std::abs(targets[ti] - s.achieved);
    }
    AlignmentRow row;
    row.target = targets[ti];
    row.mean_return = mean_of(achieved);
    row.std_return = sample_std(achieved);
    row.mean_abs_err = mean_of(errors);
    row.episodes = episodes_per_target;
    report.rows.push_back(row);
  }
  return report;
}

double mean_abs_error_over_targets(const model::Network& net, const std::string& env_id,
                                   const Config& env_cfg, const std::vector<double>& targets,
                                   int episodes_per_target, const infer::InferConfig& base,
                                   int threads) {
  auto report =
      alignment_sweep(net, env_id, env_cfg, targets, episodes_per_target, base, threads, 0.0);
  std::vector<double> errs;
  for (const auto& row : report.rows) errs.push_back(row.mean_abs_err);
  return mean_of(errs);
}

std::vector<AblationRow> ablation_n(const model::Network& net, const std::string& env_id,
                                    const Config& env_cfg, const std::vector<int>& n_list,
                                    double target, int episodes, const infer::InferConfig& base,
                                    int threads) {
  if (n_list.empty()) throw UsageError("ablation_n: empty N list");
  std::vector<AblationRow> rows;
  for (int n : n_list) {
    infer::InferConfig cfg = base;
    cfg.n_candidates = n;
    rows.push_back({std::to_string(n),
                    mean_abs_error_over_targets(net, env_id, env_cfg, {target}, episodes, cfg,
                                                threads)});
  }
  return rows;
}

model::Network train_model(const Dataset& ds, const Config& cfg, std::uint64_t seed,
                           const std::string& mask_mode) {
  auto mc = model::ModelConfig::from_config(cfg, ds.dims);
  model::Network net(mc);
  Rng init_rng(seed);
  net.init(init_rng);
  auto tc = train::TrainConfig::from_config(cfg, ds.gamma);
  tc.seed = seed;
  tc.schedule.mode_policy = mask_mode;
  train::Trainer trainer(net, ds, tc);
  trainer.run(nullptr);
  return net;
}

std::vector<AblationRow> ablation_components(const Dataset& ds, const Config& cfg,
                                             const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw UsageError("ablation_components: need at least one seed");
  std::vector<double> targets;
  for (int i = 0; i < 9; ++i) targets.push_back((0.1 + 0.9 * i / 8.0) * ds.r_max);
  const int episodes = static_cast<int>(cfg.get_int("eval.episodes", 10));
  const int threads = static_cast<int>(cfg.get_int("eval.threads", 1));
  const std::string mask_mode = cfg.get_str("train.mask_mode", "mixed");

  double err_full = 0.0, err_no_rm = 0.0, err_no_db = 0.0;
  for (std::uint64_t seed : seeds) {
    auto full = train_model(ds, cfg, seed, mask_mode);
    auto no_rm = train_model(ds, cfg, seed, "autoregressive");

    infer::InferConfig ic = infer::InferConfig::from_config(cfg, ds.r_max);
    ic.gamma = ds.gamma == 0.0 ? 1.0 : ds.gamma;
    ic.seed = derive_seed(seed, 0x5eed);
    err_full += mean_abs_error_over_targets(full, ds.env_id, cfg, targets, episodes, ic, threads);
    err_no_rm +=
        mean_abs_error_over_targets(no_rm, ds.env_id, cfg, targets, episodes, ic, threads);

    infer::InferConfig cond = ic;
    cond.conditioning_only = true;
    cond.n_candidates = 1;
    cond.delta = 0.0;
    err_no_db +=
        mean_abs_error_over_targets(full, ds.env_id, cfg, targets, episodes, cond, threads);
  }
  const double n = static_cast<double>(seeds.size());
  return {{"full", err_full / n}, {"no_rm", err_no_rm / n}, {"no_db", err_no_db / n}};
}

SafetyReport safety_eval(const model::Network& net, const std::string& env_id,
                         const Config& env_cfg, double target_fraction, double r_max,
                         int episodes, const infer::InferConfig& base, int threads) {
  if (episodes < 1) throw UsageError("safety_eval: episodes must be >= 1");
  const double target = target_fraction * r_max;
  auto stats = run_grid(net, env_id, env_cfg, {target}, episodes, base, threads);

  SafetyReport report;
  report.target_fraction = target_fraction;
  report.episodes = episodes;
  std::vector<double> achieved;
  for (const auto& s : stats) {
    achieved.push_back(s.achieved);
    switch (s.outcome) {
      case envs::TerminalKind::kRemission: ++report.remission_count; break;
      case envs::TerminalKind::kAdverse: ++report.adverse_count; break;
      default: ++report.exhausted_count; break;
    }
  }
  report.mean_return = mean_of(achieved);
  report.adverse_per_1k = 1000.0 * report.adverse_count / static_cast<double>(episodes);
  report.remission_rate = report.remission_count / static_cast<double>(episodes);
  return report;
}

}  // namespace doctor::eval
