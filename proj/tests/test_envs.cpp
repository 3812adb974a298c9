#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "doctor/envs/chain.hpp"
#include "doctor/envs/dial.hpp"
#include "doctor/envs/maze.hpp"
#include "doctor/envs/treatment.hpp"
#include "doctor/errors.hpp"

using namespace doctor;
using namespace doctor::envs;

TEST_CASE("dial starts at (0,0) and pays (a+1)/2 per step") {
  DialEnv env(DialEnvSpec{});
  Rng rng(1);
  auto s0 = env.reset(rng);
  CHECK(s0 == std::vector<double>{0.0, 0.0});

  auto res = env.step({0.5}, rng);
  CHECK(res.reward == doctest::Approx(0.75));
  CHECK(res.observation[0] == doctest::Approx(1.0 / 20.0));
  CHECK_FALSE(res.done);
}

TEST_CASE("dial constant-action episode return equals H*(a+1)/2") {
  // Dyadic action: exact in floating point.
  DialEnv env(DialEnvSpec{});
  Rng rng(1);
  env.reset(rng);
  double total = 0.0;
  bool done = false;
  while (!done) {
    auto res = env.step({0.5}, rng);
    total += res.reward;
    done = res.done;
  }
  CHECK(total == 20.0 * 0.75);

  // Arbitrary actions within tight tolerance.
  Rng arng(2);
  for (int rep = 0; rep < 10; ++rep) {
    double a = arng.uniform(-1.0, 1.0);
    env.reset(arng);
    total = 0.0;
    done = false;
    while (!done) {
      auto res = env.step({a}, arng);
      CHECK(res.reward >= 0.0);
      CHECK(res.reward <= 1.0);
      total += res.reward;
      done = res.done;
    }
    CHECK(total == doctest::Approx(20.0 * (a + 1.0) / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("maze reward follows exp(-distance)") {
  MazeEnvSpec spec;
  CHECK(MazeEnv::reward_at(spec, spec.goal[0], spec.goal[1]) == 1.0);
  // Distance ln 2 halves the reward.
  double d = std::log(2.0);
  CHECK(MazeEnv::reward_at(spec, spec.goal[0] + d, spec.goal[1]) == doctest::Approx(0.5));

  // Strictly decreasing with distance; 1 only at the goal.
  double prev = 1.0;
  for (double dist = 0.1; dist < 3.0; dist += 0.1) {
    double r = MazeEnv::reward_at(spec, spec.goal[0] + dist, spec.goal[1]);
    CHECK(r < prev);
    CHECK(r > 0.0);
    prev = r;
  }
}

TEST_CASE("maze wall blocks crossings, episode ends at horizon") {
  MazeEnvSpec spec;
  spec.horizon = 40;
  MazeEnv env(spec);
  Rng rng(5);
  env.reset(rng);
  bool done = false;
  int steps = 0;
  double side0 = 0.0;
  while (!done) {
    auto res = env.step({1.0, 0.0}, rng);  // push straight at the wall
    if (steps == 0) side0 = res.observation[0];
    CHECK(res.observation[0] <= spec.wall_x);  // started left of the wall, above the gap
    CHECK(res.reward > 0.0);
    CHECK(res.reward <= 1.0);
    done = res.done;
    ++steps;
  }
  CHECK(steps == spec.horizon);
  CHECK(side0 < spec.wall_x);
}

TEST_CASE("treatment transition rows are Eq.-consistent") {
  Config cfg;
  auto spec = make_treatment_spec(3, cfg);

  SUBCASE("rows sum to one") {
    for (int s = 0; s < spec.n_states; ++s) {
      for (int a = 0; a < spec.n_actions; ++a) {
        auto row = treatment_transition_row(spec, s, a);
        CHECK(std::abs(row.sum() - 1.0) <= 1e-9);
        CHECK((row.array() >= 0.0).all());
      }
    }
  }

  SUBCASE("identity modulation reduces to the renormalized base row") {
    auto ident = spec;
    ident.modulation.setOnes();
    for (int s = 0; s < spec.n_states; ++s) {
      auto row = treatment_transition_row(ident, s, 0);
      double leftover = 1.0 - row(0) - row(1);
      for (int j = 0; j < spec.n_states; ++j) {
        CHECK(row(2 + j) == doctest::Approx(leftover * ident.base_transitions(s, j)).epsilon(1e-12));
      }
    }
  }

  SUBCASE("forced remission is a point mass") {
    auto forced = spec;
    forced.remission_prob.setConstant(1.0);
    forced.adverse_prob.setConstant(0.0);
    auto row = treatment_transition_row(forced, 2, 1);
    CHECK(row(0) == 1.0);
    CHECK(row.tail(spec.n_states).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("random specs match an independent re-evaluation") {
    // Brute-force restatement of the modulated-transition definition.
    Rng rng(77);
    for (int rep = 0; rep < 20; ++rep) {
      auto sp = make_treatment_spec(100 + rep, cfg);
      int s = static_cast<int>(rng.index(sp.n_states));
      int a = static_cast<int>(rng.index(sp.n_actions));
      auto row = treatment_transition_row(sp, s, a);
      double p_r = sp.remission_prob(s, a);
      double p_a = sp.adverse_prob(s, a);
      double denom = 0.0;
      for (int k = 0; k < sp.n_states; ++k) denom += sp.modulation(a, k) * sp.base_transitions(s, k);
      CHECK(row(0) == doctest::Approx(p_r).epsilon(1e-12));
      CHECK(row(1) == doctest::Approx(p_a).epsilon(1e-12));
      for (int j = 0; j < sp.n_states; ++j) {
        double want = (1.0 - p_r - p_a) * sp.modulation(a, j) * sp.base_transitions(s, j) / denom;
        CHECK(row(2 + j) == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }

  SUBCASE("degenerate modulation is rejected") {
    auto bad = spec;
    bad.modulation.row(0).setZero();
    CHECK_THROWS_AS(treatment_transition_row(bad, 0, 0), UsageError);
  }
}

TEST_CASE("treatment reset is deterministic and stationary-distributed") {
  Config cfg;
  auto spec = make_treatment_spec(1, cfg);

  SUBCASE("same seed -> same hidden state and observation") {
    TreatmentEnv a(spec), b(spec);
    Rng ra(9), rb(9);
    auto oa = a.reset(ra);
    auto ob = b.reset(rb);
    CHECK(a.hidden_state() == b.hidden_state());
    CHECK(oa == ob);
  }

  SUBCASE("empirical initial-state frequencies within 3 sigma of stationary") {
    // Oracle: power iteration on the base graph.
    Eigen::VectorXd pi = stationary_distribution(spec.base_transitions);
    Eigen::VectorXd residual = spec.base_transitions.transpose() * pi - pi;
    CHECK(residual.cwiseAbs().maxCoeff() <= 1e-10);

    TreatmentEnv env(spec);
    const int draws = 100000;
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(spec.n_states);
    Rng rng(123);
    for (int i = 0; i < draws; ++i) {
      env.reset(rng);
      counts(env.hidden_state()) += 1.0;
    }
    for (int s = 0; s < spec.n_states; ++s) {
      double sigma = std::sqrt(draws * pi(s) * (1.0 - pi(s)));
      CHECK(std::abs(counts(s) - draws * pi(s)) <= 3.0 * sigma);
    }
  }
}

TEST_CASE("treatment observations and rewards") {
  Config cfg;
  auto spec = make_treatment_spec(2, cfg);
  TreatmentEnv env(spec);
  Rng rng(17);

  SUBCASE("observations stay in [0,1]^d over many steps") {
    for (int e = 0; e < 2000; ++e) {
      auto obs = env.reset(rng);
      bool done = false;
      while (!done) {
        for (double o : obs) {
          CHECK(o >= 0.0);
          CHECK(o <= 1.0);
        }
        auto res = env.step({static_cast<double>(rng.index(spec.n_actions))}, rng);
        obs = res.observation;
        done = res.done;
      }
    }
  }

  SUBCASE("remission pays r_r and terminates") {
    auto forced = spec;
    forced.remission_prob.setConstant(1.0);
    forced.adverse_prob.setConstant(0.0);
    TreatmentEnv fenv(forced);
    fenv.reset(rng);
    auto res = fenv.step({0.0}, rng);
    CHECK(res.reward == spec.remission_reward);
    CHECK(res.done);
    CHECK(res.terminal == TerminalKind::kRemission);
    CHECK_THROWS_AS(fenv.step({0.0}, rng), UsageError);
  }

  SUBCASE("adverse pays -r_r") {
    auto forced = spec;
    forced.remission_prob.setConstant(0.0);
    forced.adverse_prob.setConstant(1.0);
    TreatmentEnv fenv(forced);
    fenv.reset(rng);
    auto res = fenv.step({0.0}, rng);
    CHECK(res.reward == -spec.remission_reward);
    CHECK(res.terminal == TerminalKind::kAdverse);
  }

  SUBCASE("invalid action index") {
    env.reset(rng);
    CHECK_THROWS_AS(env.step({99.0}, rng), UsageError);
    CHECK_THROWS_AS(env.step({0.5}, rng), UsageError);
  }
}

TEST_CASE("chain value iteration") {
  SUBCASE("zero rewards give zero Q*") {
    auto spec = ChainMdpSpec::line_walk(4, 5, 0.2, 0.0, 0.0);
    auto q = value_iteration(spec);
    for (const auto& qh : q) CHECK(qh.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("horizon 1 is the immediate reward") {
    auto spec = ChainMdpSpec::line_walk(5, 1, 0.3);
    auto q = value_iteration(spec);
    CHECK(q.size() == 1);
    CHECK((q[0] - spec.reward).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("deterministic 5-state horizon-6 matches action-sequence enumeration") {
    auto spec = ChainMdpSpec::line_walk(5, 6, 0.0);
    auto q = value_iteration(spec);

    // Oracle: exhaustive search over all 2^H open-loop action sequences
    // (valid because transitions are deterministic).
    auto step_det = [&](int s, int a) {
      for (int ns = 0; ns < spec.n_states; ++ns) {
        if (spec.transitions[a](s, ns) == 1.0) return ns;
      }
      FAIL("non-deterministic row");
      return 0;
    };
    for (int s0 = 0; s0 < spec.n_states; ++s0) {
      for (int a0 = 0; a0 < 2; ++a0) {
        double best = -1e300;
        for (int seq = 0; seq < (1 << 5); ++seq) {
          double total = spec.reward(s0, a0);
          int s = step_det(s0, a0);
          for (int h = 0; h < 5; ++h) {
            int a = (seq >> h) & 1;
            total += spec.reward(s, a);
            s = step_det(s, a);
          }
          best = std::max(best, total);
        }
        CHECK(q[5](s0, a0) == doctest::Approx(best).epsilon(1e-12));
      }
    }
  }

  SUBCASE("stochastic 2-state horizon-2 matches closed-loop policy enumeration") {
    auto spec = ChainMdpSpec::line_walk(2, 2, 0.25, 1.0, 0.1);
    auto q = value_iteration(spec);

    // Oracle: enumerate every time-dependent policy pi(s, t) and evaluate
    // it exactly; the optimum must match backward induction.
    auto policy_value = [&](int pi0_s0, int pi0_s1, int pi1_s0, int pi1_s1, int s0, int a0) {
      // First step takes a0 from s0, then follows the enumerated policy.
      double v = spec.reward(s0, a0);
      for (int s1 = 0; s1 < 2; ++s1) {
        double p1 = spec.transitions[a0](s0, s1);
        int a1 = s1 == 0 ? pi1_s0 : pi1_s1;
        v += p1 * spec.reward(s1, a1);
      }
      (void)pi0_s0;
      (void)pi0_s1;
      return v;
    };
    for (int s0 = 0; s0 < 2; ++s0) {
      for (int a0 = 0; a0 < 2; ++a0) {
        double best = -1e300;
        for (int mask = 0; mask < 16; ++mask) {
          best = std::max(best, policy_value(mask & 1, (mask >> 1) & 1, (mask >> 2) & 1,
                                             (mask >> 3) & 1, s0, a0));
        }
        CHECK(q[1](s0, a0) == doctest::Approx(best).epsilon(1e-12));
      }
    }
  }

  SUBCASE("Bellman optimality residual is zero by construction") {
    auto spec = ChainMdpSpec::line_walk(6, 7, 0.15);
    auto q = value_iteration(spec);
    for (int h = 1; h < spec.horizon; ++h) {
      Eigen::VectorXd v_prev = q[h - 1].rowwise().maxCoeff();
      for (int a = 0; a < spec.n_actions; ++a) {
        Eigen::VectorXd want = spec.reward.col(a) + spec.transitions[a] * v_prev;
        CHECK((q[h].col(a) - want).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("env specs round-trip through the spec file format") {
  Config cfg;
  const std::string path = "envs_spec.jsonl";

  auto treat = std::make_unique<TreatmentEnv>(make_treatment_spec(4, cfg));
  save_env_spec(*treat, path);
  auto loaded = load_env_spec(path);
  auto* tl = dynamic_cast<TreatmentEnv*>(loaded.get());
  REQUIRE(tl != nullptr);
  CHECK(tl->spec().base_transitions == treat->spec().base_transitions);
  CHECK(tl->spec().soc_q0 == treat->spec().soc_q0);
  CHECK(tl->env_id() == "treatment:4");

  auto dial = make_env("dial", cfg);
  save_env_spec(*dial, path);
  CHECK(load_env_spec(path)->env_id() == "dial");

  auto chain = make_env("chain", cfg);
  save_env_spec(*chain, path);
  CHECK(load_env_spec(path)->env_id() == "chain");

  auto maze = make_env("maze", cfg);
  save_env_spec(*maze, path);
  CHECK(load_env_spec(path)->env_id() == "maze");

  CHECK_THROWS_AS(make_env("nonsense", cfg), UsageError);
  std::remove(path.c_str());
}
