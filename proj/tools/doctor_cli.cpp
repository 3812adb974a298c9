// Command-line front end: dataset generation, filtering, training,
// alignment/ablation/safety evaluation, online fine-tuning and the
// gradient check.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "doctor/behavior/collect.hpp"
#include "doctor/config.hpp"
#include "doctor/dataset.hpp"
#include "doctor/envs/env.hpp"
#include "doctor/errors.hpp"
#include "doctor/eval/metrics.hpp"
#include "doctor/eval/sweeps.hpp"
#include "doctor/infer/finetune.hpp"
#include "doctor/infer/infer.hpp"
#include "doctor/model/checkpoint.hpp"
#include "doctor/numeric.hpp"
#include "doctor/train/grad_check.hpp"
#include "doctor/train/trainer.hpp"

namespace {

using namespace doctor;

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_file, "config file (key=value lines)");
  cmd->add_option("--set", opts.sets, "override a config key, e.g. --set train.lr=3e-4");
  cmd->add_option("--seed", opts.seed, "base seed")->each([&](const std::string&) {
    opts.seed_given = true;
  });
}

Config resolve_config(const CommonOpts& opts) {
  Config cfg;
  if (!opts.config_file.empty()) cfg = Config::from_file(opts.config_file);
  for (const auto& s : opts.sets) cfg.set(s);
  return cfg;
}

void print_resolved(const Config& cfg, std::uint64_t seed) {
  std::cout << "resolved config:\n" << cfg.resolved();
  std::cout << "seed = " << seed << "\n";
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) seeds.push_back(std::stoull(tok));
  if (seeds.empty()) throw UsageError("empty seed list");
  return seeds;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> vals;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) vals.push_back(std::stoi(tok));
  if (vals.empty()) throw UsageError("empty list");
  return vals;
}

double resolve_r_max(const std::string& data_path, double r_max_flag, bool r_max_given) {
  if (r_max_given) return r_max_flag;
  if (data_path.empty()) {
    throw UsageError("need --data (to read r_max) or an explicit --r-max");
  }
  return load_dataset(data_path).r_max;
}

std::string default_policy_for(const std::string& env_id) {
  if (env_id == "dial") return "mixture";
  if (env_id.rfind("treatment:", 0) == 0) return "soc";
  return "epsgreedy";
}

int run_cli(int argc, char** argv) {
  CLI::App app{"doctor: target-aligned offline RL (masked sequence model + double-check)"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "roll out a behavior policy into a dataset");
  CommonOpts gen_opts;
  std::string gen_env, gen_policy, gen_out, gen_env_spec_out;
  std::size_t gen_episodes = 1000;
  double gen_gamma = 1.0;
  int gen_threads = 1;
  gen->add_option("--env", gen_env, "env id (dial|maze|treatment:<seed>|chain)")->required();
  gen->add_option("--policy", gen_policy, "behavior policy (soc|mixture|epsgreedy)");
  gen->add_option("--episodes", gen_episodes, "episode count");
  gen->add_option("--gamma", gen_gamma, "discount for returns-to-go");
  gen->add_option("--out", gen_out, "output dataset path")->required();
  gen->add_option("--threads", gen_threads, "rollout workers");
  gen->add_option("--save-env-spec", gen_env_spec_out, "also write the env spec file");
  add_common(gen, gen_opts);

  // filter-data
  auto* filter = app.add_subcommand("filter-data", "drop or keep top-return trajectories");
  CommonOpts filter_opts;
  std::string filter_in, filter_out, filter_mode = "drop";
  double filter_percent = 0.0;
  filter->add_option("--in", filter_in, "input dataset")->required();
  filter->add_option("--out", filter_out, "output dataset")->required();
  filter->add_option("--percent", filter_percent, "percent of trajectories")->required();
  filter->add_option("--mode", filter_mode, "keep|drop (default drop)");
  add_common(filter, filter_opts);

  // train
  auto* train_cmd = app.add_subcommand("train", "offline joint training");
  CommonOpts train_opts;
  std::string train_data, train_out, train_metrics;
  train_cmd->add_option("--data", train_data, "dataset path")->required();
  train_cmd->add_option("--out", train_out, "checkpoint path")->required();
  train_cmd->add_option("--metrics", train_metrics, "metrics log path (default <out>.log)");
  add_common(train_cmd, train_opts);

  // eval-align
  auto* align = app.add_subcommand("eval-align", "aligned rollouts over a target grid");
  CommonOpts align_opts;
  std::string align_ckpt, align_env, align_targets, align_csv, align_data, align_trace;
  int align_episodes = 10, align_threads = 1;
  double align_r_max = 0.0;
  bool align_r_max_given = false;
  align->add_option("--checkpoint", align_ckpt)->required();
  align->add_option("--env", align_env)->required();
  align->add_option("--targets", align_targets, "grid start:stop:step")->required();
  align->add_option("--episodes", align_episodes, "episodes per target");
  align->add_option("--out-csv", align_csv)->required();
  align->add_option("--data", align_data, "dataset path (for r_max)");
  align->add_option("--r-max", align_r_max, "explicit r_max")->each([&](const std::string&) {
    align_r_max_given = true;
  });
  align->add_option("--threads", align_threads, "rollout workers");
  align->add_option("--trace-out", align_trace, "write per-episode rollout traces under this prefix");
  add_common(align, align_opts);

  // ablate-n
  auto* abn = app.add_subcommand("ablate-n", "candidate-count sweep at a fixed target");
  CommonOpts abn_opts;
  std::string abn_ckpt, abn_env, abn_list = "2,5,10,100,300", abn_csv, abn_data;
  double abn_target = 0.0, abn_r_max = 0.0;
  bool abn_r_max_given = false;
  int abn_episodes = 10, abn_threads = 1;
  abn->add_option("--checkpoint", abn_ckpt)->required();
  abn->add_option("--env", abn_env)->required();
  abn->add_option("--target", abn_target)->required();
  abn->add_option("--n-list", abn_list, "comma-separated N values");
  abn->add_option("--episodes", abn_episodes);
  abn->add_option("--out-csv", abn_csv)->required();
  abn->add_option("--data", abn_data, "dataset path (for r_max)");
  abn->add_option("--r-max", abn_r_max)->each([&](const std::string&) { abn_r_max_given = true; });
  abn->add_option("--threads", abn_threads);
  add_common(abn, abn_opts);

  // ablate-components
  auto* abc = app.add_subcommand("ablate-components", "full vs w/o RM vs w/o DB");
  CommonOpts abc_opts;
  std::string abc_data, abc_csv, abc_seeds = "1,2,3";
  abc->add_option("--data", abc_data)->required();
  abc->add_option("--out-csv", abc_csv)->required();
  abc->add_option("--seeds", abc_seeds, "comma-separated training seeds");
  add_common(abc, abc_opts);

  // eval-safety
  auto* safety = app.add_subcommand("eval-safety", "treatment-env outcome statistics");
  CommonOpts safety_opts;
  std::string safety_ckpt, safety_env, safety_csv, safety_data;
  double safety_fraction = 0.4, safety_r_max = 0.0;
  bool safety_r_max_given = false;
  int safety_episodes = 1000, safety_threads = 1;
  safety->add_option("--checkpoint", safety_ckpt)->required();
  safety->add_option("--env", safety_env)->required();
  safety->add_option("--target-fraction", safety_fraction, "0.4 moderate, 0.8 aggressive");
  safety->add_option("--episodes", safety_episodes);
  safety->add_option("--out-csv", safety_csv)->required();
  safety->add_option("--data", safety_data, "dataset path (for r_max)");
  safety->add_option("--r-max", safety_r_max)->each([&](const std::string&) {
    safety_r_max_given = true;
  });
  safety->add_option("--threads", safety_threads);
  add_common(safety, safety_opts);

  // finetune
  auto* fine = app.add_subcommand("finetune", "online fine-tuning with Boltzmann exploration");
  CommonOpts fine_opts;
  std::string fine_ckpt, fine_data, fine_env, fine_out;
  int fine_episodes = 200, fine_updates = 200, fine_candidates = 32;
  fine->add_option("--checkpoint", fine_ckpt)->required();
  fine->add_option("--data", fine_data, "offline dataset (seeds the replay buffer)")->required();
  fine->add_option("--env", fine_env)->required();
  fine->add_option("--episodes", fine_episodes, "interaction budget");
  fine->add_option("--updates", fine_updates, "gradient updates per episode");
  fine->add_option("--candidates", fine_candidates, "N during exploration");
  fine->add_option("--out", fine_out, "output checkpoint")->required();
  add_common(fine, fine_opts);

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "finite-difference gradient verification");
  CommonOpts gc_opts;
  double gc_tol = 1e-4;
  gc->add_option("--tol", gc_tol, "max relative error");
  add_common(gc, gc_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (gen->parsed()) {
    auto cfg = resolve_config(gen_opts);
    if (gen_policy.empty()) gen_policy = default_policy_for(gen_env);
    print_resolved(cfg, gen_opts.seed);
    auto ds = behavior::collect_dataset(gen_env, gen_policy, gen_episodes, gen_gamma,
                                        gen_opts.seed, cfg, gen_threads);
    save_dataset(ds, gen_out);
    std::cout << "wrote " << ds.size() << " trajectories to " << gen_out
              << " (r_max = " << format_double(ds.r_max) << ")\n";
    if (!gen_env_spec_out.empty()) {
      auto env = envs::make_env(gen_env, cfg);
      envs::save_env_spec(*env, gen_env_spec_out);
      std::cout << "wrote env spec to " << gen_env_spec_out << "\n";
    }
    return kExitOk;
  }

  if (filter->parsed()) {
    auto cfg = resolve_config(filter_opts);
    print_resolved(cfg, filter_opts.seed);
    auto ds = load_dataset(filter_in);
    Dataset out;
    if (filter_mode == "drop") {
      out = behavior::filter_top_returns(ds, filter_percent);
    } else if (filter_mode == "keep") {
      out = behavior::keep_top_returns(ds, filter_percent);
    } else {
      throw UsageError("--mode must be keep or drop");
    }
    save_dataset(out, filter_out);
    std::cout << "kept " << out.size() << " of " << ds.size() << " trajectories (r_max = "
              << format_double(out.r_max) << ")\n";
    return kExitOk;
  }

  if (train_cmd->parsed()) {
    auto cfg = resolve_config(train_opts);
    if (train_opts.seed_given) cfg.set("train.seed", std::to_string(train_opts.seed));
    auto ds = load_dataset(train_data);
    auto tc = train::TrainConfig::from_config(cfg, ds.gamma);
    print_resolved(cfg, tc.seed);
    auto mc = model::ModelConfig::from_config(cfg, ds.dims);
    model::Network net(mc);
    Rng init_rng(tc.seed);
    net.init(init_rng);
    train::Trainer trainer(net, ds, tc);
    std::string metrics_path = train_metrics.empty() ? train_out + ".log" : train_metrics;
    std::ofstream metrics(metrics_path, std::ios::trunc);
    if (!metrics) throw IoError("cannot open for writing: " + metrics_path);
    trainer.run(&metrics, train_out);
    std::cout << "trained " << tc.total_steps << " steps; checkpoint at " << train_out << "\n";
    return kExitOk;
  }

  if (align->parsed()) {
    auto cfg = resolve_config(align_opts);
    print_resolved(cfg, align_opts.seed);
    auto ck = model::load_checkpoint(align_ckpt);
    double r_max = resolve_r_max(align_data, align_r_max, align_r_max_given);
    auto targets = eval::parse_target_grid(align_targets);
    auto ic = infer::InferConfig::from_config(cfg, r_max);
    ic.seed = align_opts.seed;
    auto report = eval::alignment_sweep(ck.net, align_env, cfg, targets, align_episodes, ic,
                                        align_threads, r_max);
    eval::write_alignment_csv(report, align_csv);
    std::cout << "wrote " << report.rows.size() << " rows to " << align_csv << "\n";
    if (!align_trace.empty()) {
      // One audit trace per target at the sweep's first episode seed.
      auto env = envs::make_env(align_env, cfg);
      for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        infer::InferConfig tc_cfg = ic;
        tc_cfg.seed = derive_seed(ic.seed, ti * align_episodes);
        auto rollout = infer::rollout_aligned(*env, ck.net, targets[ti], tc_cfg);
        infer::save_rollout_trace(rollout, ck.net.config().action_kind == ActionKind::kDiscrete
                                               ? ModalityDims{ck.net.config().state_dim,
                                                              ck.net.config().action_dim,
                                                              ActionKind::kDiscrete}
                                               : ModalityDims{ck.net.config().state_dim,
                                                              ck.net.config().action_dim,
                                                              ActionKind::kContinuous},
                                  ic.gamma, align_env,
                                  align_trace + ".target" + std::to_string(ti) + ".jsonl");
      }
    }
    return kExitOk;
  }

  if (abn->parsed()) {
    auto cfg = resolve_config(abn_opts);
    print_resolved(cfg, abn_opts.seed);
    auto ck = model::load_checkpoint(abn_ckpt);
    double r_max = resolve_r_max(abn_data, abn_r_max, abn_r_max_given);
    auto ic = infer::InferConfig::from_config(cfg, r_max);
    ic.seed = abn_opts.seed;
    auto rows = eval::ablation_n(ck.net, abn_env, cfg, parse_int_list(abn_list), abn_target,
                                 abn_episodes, ic, abn_threads);
    eval::write_ablation_csv(rows, abn_csv);
    std::cout << "wrote " << rows.size() << " rows to " << abn_csv << "\n";
    return kExitOk;
  }

  if (abc->parsed()) {
    auto cfg = resolve_config(abc_opts);
    print_resolved(cfg, abc_opts.seed);
    auto ds = load_dataset(abc_data);
    auto rows = eval::ablation_components(ds, cfg, parse_seed_list(abc_seeds));
    eval::write_ablation_csv(rows, abc_csv);
    std::cout << "wrote " << rows.size() << " rows to " << abc_csv << "\n";
    return kExitOk;
  }

  if (safety->parsed()) {
    auto cfg = resolve_config(safety_opts);
    print_resolved(cfg, safety_opts.seed);
    auto ck = model::load_checkpoint(safety_ckpt);
    double r_max = resolve_r_max(safety_data, safety_r_max, safety_r_max_given);
    auto ic = infer::InferConfig::from_config(cfg, r_max);
    ic.seed = safety_opts.seed;
    auto report = eval::safety_eval(ck.net, safety_env, cfg, safety_fraction, r_max,
                                    safety_episodes, ic, safety_threads);
    eval::write_safety_csv({report}, safety_csv);
    std::cout << "target " << format_double(safety_fraction) << " * r_max: mean return "
              << format_double(report.mean_return) << ", adverse/1k "
              << format_double(report.adverse_per_1k) << ", remission rate "
              << format_double(report.remission_rate) << "\n";
    return kExitOk;
  }

  if (fine->parsed()) {
    auto cfg = resolve_config(fine_opts);
    print_resolved(cfg, fine_opts.seed);
    auto ck = model::load_checkpoint(fine_ckpt);
    auto ds = load_dataset(fine_data);
    auto env = envs::make_env(fine_env, cfg);
    auto tc = train::TrainConfig::from_config(cfg, ds.gamma);
    tc.warmup_steps = 0;
    tc.seed = fine_opts.seed;
    infer::FinetuneConfig fc;
    fc.episodes = fine_episodes;
    fc.updates_per_episode = fine_updates;
    fc.n_candidates = fine_candidates;
    fc.seed = fine_opts.seed;
    fc.beta = cfg.get_double("infer.beta", fc.beta);
    auto result = infer::online_finetune(*env, ck.net, ds, fc, tc);
    model::save_checkpoint(ck.net, ck.step, fine_opts.seed, fine_out);
    double last = result.episode_returns.empty() ? 0.0 : result.episode_returns.back();
    std::cout << "finetuned over " << result.episode_returns.size()
              << " episodes (buffer size " << result.buffer_size << ", last return "
              << format_double(last) << "); checkpoint at " << fine_out << "\n";
    return kExitOk;
  }

  if (gc->parsed()) {
    auto cfg = resolve_config(gc_opts);
    print_resolved(cfg, gc_opts.seed);
    // Tiny 64-bit model with every modality in play.
    ModalityDims dims{2, 2, ActionKind::kDiscrete};
    model::ModelConfig mc;
    mc.context_len = 2;
    mc.embed_dim = 6;
    mc.enc_layers = 1;
    mc.dec_layers = 1;
    mc.heads = 2;
    mc.q_head_width = 4;
    mc.dropout = 0.0;
    mc.action_kind = dims.action_kind;
    mc.state_dim = dims.state_dim;
    mc.action_dim = dims.action_dim;
    model::Network net(mc);
    Rng rng(derive_seed(gc_opts.seed, 1));
    net.init(rng);
    std::cout << "parameters: " << net.params().scalar_count() << "\n";

    std::vector<model::MaskedSequence> batch;
    for (int i = 0; i < 4; ++i) {
      SubTrajectory w;
      w.context_len = mc.context_len;
      w.pad.assign(mc.context_len, false);
      w.terminal.assign(mc.context_len, false);
      w.terminal[mc.context_len - 1] = (i % 2 == 0);
      for (int t = 0; t < mc.context_len; ++t) {
        w.returns.push_back(rng.uniform(-1.0, 1.0));
        w.states.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
        w.actions.push_back({static_cast<double>(rng.index(dims.action_dim))});
        w.rewards.push_back(rng.uniform(-1.0, 1.0));
      }
      std::vector<bool> mask(3 * mc.context_len, false);
      for (std::size_t s = 0; s < mask.size(); ++s) mask[s] = rng.bernoulli(0.4);
      batch.push_back(model::from_window(w, dims, mask));
    }
    double worst = 0.0;
    for (double nu : {0.5, 0.7, 0.9}) {
      double err = train::grad_check(net, batch, 0.99, nu);
      std::cout << "nu=" << format_double(nu) << " max rel err = " << format_double(err) << "\n";
      worst = std::max(worst, err);
    }
    if (worst > gc_tol) {
      std::cerr << "gradient check failed: " << format_double(worst) << " > tol\n";
      return kExitNumeric;
    }
    std::cout << "gradient check passed\n";
    return kExitOk;
  }

  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
