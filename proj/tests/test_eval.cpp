#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctor/behavior/collect.hpp"
#include "doctor/errors.hpp"
#include "doctor/eval/metrics.hpp"
#include "doctor/eval/sweeps.hpp"

using namespace doctor;
using namespace doctor::eval;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

model::Network tiny_net(ActionKind kind, int state_dim, int action_dim, std::uint64_t seed) {
  model::ModelConfig cfg;
  cfg.context_len = 4;
  cfg.embed_dim = 8;
  cfg.enc_layers = 1;
  cfg.dec_layers = 1;
  cfg.heads = 2;
  cfg.q_head_width = 4;
  cfg.dropout = 0.0;
  cfg.action_kind = kind;
  cfg.state_dim = state_dim;
  cfg.action_dim = action_dim;
  model::Network net(cfg);
  Rng rng(seed);
  net.init(rng);
  return net;
}

}  // namespace

TEST_CASE("abs_error") {
  CHECK(abs_error(10.0, {3.0, 5.0}) == 2.0);
  CHECK(abs_error(8.0, {3.0, 5.0}) == 0.0);
  // Hand summation on a 3-episode toy trace at 0.4 * r_max.
  double r_max = 20.0;
  std::vector<std::vector<double>> episodes = {{1, 2, 3}, {4, 0, 0.5}, {2, 2, 2}};
  for (const auto& ep : episodes) {
    double hand = 0.0;
    for (double r : ep) hand += r;
    CHECK(abs_error(0.4 * r_max, ep) == doctest::Approx(std::abs(0.4 * r_max - hand)));
  }
}

TEST_CASE("target grid parser") {
  auto g = parse_target_grid("2:18:2");
  CHECK(g.size() == 9);
  CHECK(g.front() == 2.0);
  CHECK(g.back() == 18.0);

  g = parse_target_grid("1:2:0.5");
  CHECK(g.size() == 3);

  // floor((stop-start)/step)+1 when the step does not divide the range.
  g = parse_target_grid("0:10:3");
  CHECK(g.size() == 4);
  CHECK(g.back() == 9.0);

  CHECK_THROWS_AS(parse_target_grid("5"), UsageError);
  CHECK_THROWS_AS(parse_target_grid("1:2:0"), UsageError);
  CHECK_THROWS_AS(parse_target_grid("3:1:1"), UsageError);
}

TEST_CASE("csv writers emit stable bytes with headers") {
  AlignmentReport report;
  report.rows.push_back({2.0, 1.9, 0.1, 0.15, 10});
  report.rows.push_back({4.0, 4.05, 0.2, 0.2, 10});
  const std::string pa = "eval_a.csv", pb = "eval_b.csv";
  write_alignment_csv(report, pa);
  write_alignment_csv(report, pb);
  auto a = read_file(pa);
  CHECK(a == read_file(pb));
  CHECK(a.rfind("target,mean_return,std_return,mean_abs_err,episodes\n", 0) == 0);
  CHECK(a.back() == '\n');

  write_ablation_csv({{"full", 0.5}, {"no_db", 0.9}}, pa);
  CHECK(read_file(pa).rfind("variant_or_N,mean_abs_err\n", 0) == 0);

  SafetyReport s;
  s.target_fraction = 0.4;
  s.mean_return = 3.0;
  s.adverse_per_1k = 12.0;
  s.remission_rate = 0.5;
  s.episodes = 1000;
  write_safety_csv({s}, pa);
  CHECK(read_file(pa).rfind("target_fraction,mean_return,adverse_per_1k,remission_rate,episodes\n",
                            0) == 0);
  std::remove(pa.c_str());
  std::remove(pb.c_str());
}

TEST_CASE("alignment sweep on a deterministic env") {
  auto net = tiny_net(ActionKind::kContinuous, 2, 1, 3);
  Config cfg;
  infer::InferConfig ic;
  ic.n_candidates = 4;
  ic.delta = 0.3;
  ic.gamma = 1.0;
  ic.seed = 11;

  SUBCASE("std is zero when env, model and seeds are deterministic") {
    // Same derived seed per episode would be cheating; instead use a
    // dial env (deterministic) with delta 0 so every episode plays the
    // same actions regardless of the per-episode seed.
    infer::InferConfig det = ic;
    det.delta = 0.0;
    det.n_candidates = 1;
    auto report = alignment_sweep(net, "dial", cfg, {5.0}, 3, det, 1, 20.0);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].std_return == 0.0);
    CHECK(report.rows[0].episodes == 3);
  }

  SUBCASE("identical seeds give identical CSV bytes") {
    auto r1 = alignment_sweep(net, "dial", cfg, {2.0, 4.0}, 2, ic, 1, 20.0);
    auto r2 = alignment_sweep(net, "dial", cfg, {2.0, 4.0}, 2, ic, 1, 20.0);
    const std::string pa = "eval_s1.csv", pb = "eval_s2.csv";
    write_alignment_csv(r1, pa);
    write_alignment_csv(r2, pb);
    CHECK(read_file(pa) == read_file(pb));
    std::remove(pa.c_str());
    std::remove(pb.c_str());
  }

  SUBCASE("threads do not change results") {
    auto r1 = alignment_sweep(net, "dial", cfg, {2.0, 4.0, 6.0}, 4, ic, 1, 20.0);
    auto r4 = alignment_sweep(net, "dial", cfg, {2.0, 4.0, 6.0}, 4, ic, 4, 20.0);
    REQUIRE(r1.rows.size() == r4.rows.size());
    for (std::size_t i = 0; i < r1.rows.size(); ++i) {
      CHECK(r1.rows[i].mean_return == r4.rows[i].mean_return);
      CHECK(r1.rows[i].mean_abs_err == r4.rows[i].mean_abs_err);
    }
  }

  SUBCASE("mean absolute error dominates |mean - target| (Jensen)") {
    auto report = alignment_sweep(net, "dial", cfg, {2.0, 6.0, 10.0}, 5, ic, 1, 20.0);
    for (const auto& row : report.rows) {
      CHECK(row.mean_abs_err >= std::abs(row.mean_return - row.target) - 1e-12);
    }
  }
}

TEST_CASE("ablation_n keeps duplicated entries") {
  auto net = tiny_net(ActionKind::kContinuous, 2, 1, 5);
  Config cfg;
  infer::InferConfig ic;
  ic.delta = 0.2;
  ic.seed = 3;
  auto rows = ablation_n(net, "dial", cfg, {2, 2, 5}, 6.0, 2, ic, 1);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].variant_or_n == "2");
  CHECK(rows[1].variant_or_n == "2");
  CHECK(rows[0].mean_abs_err == rows[1].mean_abs_err);
  CHECK(rows[2].variant_or_n == "5");
}

TEST_CASE("safety_eval partitions outcomes") {
  auto net = tiny_net(ActionKind::kDiscrete, 8, 6, 7);
  Config cfg;
  infer::InferConfig ic;
  ic.n_candidates = 2;
  ic.delta = 1.0;
  ic.gamma = 1.0;
  ic.seed = 19;
  auto report = safety_eval(net, "treatment:1", cfg, 0.4, 14.0, 50, ic, 1);
  CHECK(report.episodes == 50);
  CHECK(report.adverse_count + report.remission_count + report.exhausted_count == 50);
  CHECK(report.adverse_per_1k == doctest::Approx(1000.0 * report.adverse_count / 50.0));
  CHECK(report.remission_rate == doctest::Approx(report.remission_count / 50.0));
}

TEST_CASE("ablation_components trains and orders variants structurally") {
  // Smoke-scale: checks the protocol wiring (full and no_db share the
  // checkpoint; no_rm trains with autoregressive-only masking), not the
  // quality direction, which the acceptance suite owns.
  Config cfg;
  cfg.set("model.context_len=4");
  cfg.set("model.embed_dim=8");
  cfg.set("model.enc_layers=1");
  cfg.set("model.dec_layers=1");
  cfg.set("model.heads=2");
  cfg.set("model.q_head_width=4");
  cfg.set("model.dropout=0");
  cfg.set("train.total_steps=30");
  cfg.set("train.warmup_steps=5");
  cfg.set("train.batch_size=8");
  cfg.set("train.lr=1e-3");
  cfg.set("eval.episodes=2");
  cfg.set("infer.n=4");
  auto ds = behavior::collect_dataset("dial", "mixture", 30, 1.0, 23, cfg);
  auto rows = ablation_components(ds, cfg, {1});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].variant_or_n == "full");
  CHECK(rows[1].variant_or_n == "no_rm");
  CHECK(rows[2].variant_or_n == "no_db");
  for (const auto& r : rows) CHECK(std::isfinite(r.mean_abs_err));
}
