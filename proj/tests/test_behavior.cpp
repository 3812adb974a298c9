#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "doctor/behavior/collect.hpp"
#include "doctor/behavior/policies.hpp"
#include "doctor/errors.hpp"

using namespace doctor;
using namespace doctor::behavior;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset dataset_with_returns(const std::vector<double>& first_returns) {
  Dataset ds;
  ds.gamma = 1.0;
  ds.env_id = "dial";
  ds.dims = {1, 1, ActionKind::kContinuous};
  for (double r : first_returns) {
    Trajectory t;
    t.states = {{0.0}, {0.0}};
    t.actions = {{0.0}, {0.0}};
    t.rewards = {0.0, r};
    t.returns = compute_returns(t.rewards, ds.gamma);
    ds.trajectories.push_back(std::move(t));
  }
  ds.r_max = max_initial_return(ds);
  return ds;
}

std::multiset<double> first_returns(const Dataset& ds) {
  std::multiset<double> out;
  for (const auto& t : ds.trajectories) out.insert(t.returns[0]);
  return out;
}

}  // namespace

TEST_CASE("soc_select respects the safe set") {
  // Hand-built 3-treatment spec: shifts decide safety, q decides rank.
  Eigen::MatrixXd shift(3, 2);
  shift << 1.0, 0.0,   // raises symptom 0
           -0.5, 0.2,  // raises symptom 1
           -0.1, -0.2; // raises nothing
  SocPolicyState st;
  st.q = Eigen::Vector3d(5.0, 3.0, 1.0);
  st.kappa = 0.6;  // threshold 1 - kappa/2 = 0.7

  SUBCASE("all symptoms low: unrestricted argmax") {
    CHECK(soc_select(st, shift, {0.0, 0.0}) == 0);
  }

  SUBCASE("symptom 0 elevated: only treatments with nonpositive shift there") {
    auto safe = soc_safe_set(shift, st.kappa, {1.0, 0.0});
    CHECK(safe == std::vector<int>{1, 2});
    CHECK(soc_select(st, shift, {1.0, 0.0}) == 1);  // higher q among safe
  }

  SUBCASE("both symptoms elevated: single fully safe treatment wins despite q order") {
    auto safe = soc_safe_set(shift, st.kappa, {1.0, 1.0});
    CHECK(safe == std::vector<int>{2});
    CHECK(soc_select(st, shift, {1.0, 1.0}) == 2);
  }

  SUBCASE("equal q ties break to the lowest index") {
    SocPolicyState tie = st;
    tie.q = Eigen::Vector3d(4.0, 4.0, 0.0);
    CHECK(soc_select(tie, shift, {0.0, 0.0}) == 0);
  }

  SUBCASE("empty safe set falls back to fewest violations") {
    Eigen::MatrixXd all_bad(2, 2);
    all_bad << 1.0, 1.0,  // violates both elevated symptoms
               1.0, 0.0;  // violates one
    SocPolicyState s2;
    s2.q = Eigen::Vector2d(10.0, -10.0);
    s2.kappa = 0.6;
    CHECK(soc_safe_set(all_bad, s2.kappa, {1.0, 1.0}).empty());
    CHECK(soc_select(s2, all_bad, {1.0, 1.0}) == 1);
  }
}

TEST_CASE("soc_select never leaves a nonempty safe set (randomized)") {
  Rng rng(31);
  for (int rep = 0; rep < 10000; ++rep) {
    int na = 2 + static_cast<int>(rng.index(5));
    int no = 1 + static_cast<int>(rng.index(4));
    Eigen::MatrixXd shift(na, no);
    for (int a = 0; a < na; ++a) {
      for (int o = 0; o < no; ++o) {
        shift(a, o) = rng.bernoulli(0.5) ? rng.uniform(-1.0, 1.0) : 0.0;
      }
    }
    SocPolicyState st;
    st.q = Eigen::VectorXd::Zero(na);
    for (int a = 0; a < na; ++a) st.q(a) = rng.uniform(-5.0, 5.0);
    st.kappa = rng.uniform(0.1, 1.0);
    std::vector<double> obs(no);
    for (auto& o : obs) o = rng.uniform(0.0, 1.0);

    auto safe = soc_safe_set(shift, st.kappa, obs);
    int chosen = soc_select(st, shift, obs);
    if (!safe.empty()) {
      CHECK(std::find(safe.begin(), safe.end(), chosen) != safe.end());
    }
  }
}

TEST_CASE("soc_update is the recency-weighted rule") {
  SocPolicyState st;
  st.q = Eigen::Vector2d(0.0, 7.0);
  st.alpha = 0.1;
  soc_update(st, 0, 1.0);
  CHECK(st.q(0) == doctest::Approx(0.1));
  CHECK(st.q(1) == 7.0);  // untouched

  st.alpha = 0.0;
  soc_update(st, 0, 100.0);
  CHECK(st.q(0) == doctest::Approx(0.1));

  st.alpha = 1.0;
  soc_update(st, 0, -3.0);
  CHECK(st.q(0) == -3.0);

  // Contraction toward R: |Q' - R| = (1 - alpha) |Q - R|.
  Rng rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    SocPolicyState s;
    s.q = Eigen::VectorXd::Constant(1, rng.uniform(-10.0, 10.0));
    s.alpha = rng.uniform(0.0, 1.0);
    double r = rng.uniform(-10.0, 10.0);
    double before = std::abs(s.q(0) - r);
    soc_update(s, 0, r);
    CHECK(std::abs(s.q(0) - r) == doctest::Approx((1.0 - s.alpha) * before).epsilon(1e-12));
  }
}

TEST_CASE("collect_dataset is deterministic and recursion-clean") {
  Config cfg;
  auto a = collect_dataset("dial", "mixture", 20, 1.0, 7, cfg);
  auto b = collect_dataset("dial", "mixture", 20, 1.0, 7, cfg);
  CHECK_NOTHROW(validate_dataset(a));

  const std::string pa = "behavior_a.jsonl", pb = "behavior_b.jsonl";
  save_dataset(a, pa);
  save_dataset(b, pb);
  CHECK(read_file(pa) == read_file(pb));

  // Sharded collection agrees with sequential (per-episode seeds).
  auto c = collect_dataset("dial", "mixture", 20, 1.0, 7, cfg, 4);
  save_dataset(c, pb);
  CHECK(read_file(pa) == read_file(pb));
  std::remove(pa.c_str());
  std::remove(pb.c_str());
}

TEST_CASE("dial mixture covers the return range") {
  Config cfg;
  auto ds = collect_dataset("dial", "mixture", 5000, 1.0, 11, cfg);
  double lo = 1e300, hi = -1e300;
  std::vector<int> deciles(10, 0);
  for (const auto& t : ds.trajectories) {
    double r = t.returns[0];
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    int d = std::clamp(static_cast<int>(r / 2.0), 0, 9);
    ++deciles[d];
  }
  CHECK(hi - lo >= 18.0);  // >= 90% of [0, 20]
  for (int d = 0; d < 10; ++d) CHECK(deciles[d] > 0);
  CHECK(ds.r_max == hi);
}

TEST_CASE("soc data collection runs clean on the treatment env") {
  Config cfg;
  auto ds = collect_dataset("treatment:1", "soc", 50, 1.0, 3, cfg);
  CHECK_NOTHROW(validate_dataset(ds));
  CHECK(ds.dims.action_kind == ActionKind::kDiscrete);
  for (const auto& t : ds.trajectories) CHECK(t.horizon() <= 8);
}

TEST_CASE("filter_top_returns") {
  SUBCASE("percent 0 is the identity") {
    auto ds = dataset_with_returns({5, 3, 9, 1});
    auto out = filter_top_returns(ds, 0.0);
    CHECK(out.size() == 4);
    CHECK(first_returns(out) == first_returns(ds));
  }

  SUBCASE("10 distinct returns, percent 10 removes exactly the max") {
    std::vector<double> rets = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    auto ds = dataset_with_returns(rets);
    auto out = filter_top_returns(ds, 10.0);
    CHECK(out.size() == 9);
    CHECK(first_returns(out).count(10.0) == 0);
    CHECK(out.r_max == 9.0);
  }

  SUBCASE("ceiling rule: percent 25 of 8 removes 2") {
    auto ds = dataset_with_returns({1, 2, 3, 4, 5, 6, 7, 8});
    auto out = filter_top_returns(ds, 25.0);
    CHECK(out.size() == 6);
    CHECK(out.r_max == 6.0);
    // Enumeration: any percent in (12.5, 25] removes exactly 2.
    CHECK(filter_top_returns(ds, 13.0).size() == 6);
    CHECK(filter_top_returns(ds, 12.5).size() == 7);
  }

  SUBCASE("emptying the dataset is an error") {
    auto ds = dataset_with_returns({1.0});
    CHECK_THROWS_AS(filter_top_returns(ds, 50.0), UsageError);
    CHECK_THROWS_AS(filter_top_returns(ds, 100.0), UsageError);
  }
}

TEST_CASE("keep_top_returns") {
  SUBCASE("percent 100 is the identity") {
    auto ds = dataset_with_returns({5, 3, 9});
    auto out = keep_top_returns(ds, 100.0);
    CHECK(first_returns(out) == first_returns(ds));
  }

  SUBCASE("percent 5 of 100 distinct keeps the 5 best") {
    std::vector<double> rets;
    for (int i = 0; i < 100; ++i) rets.push_back(i);
    auto ds = dataset_with_returns(rets);
    auto out = keep_top_returns(ds, 5.0);
    CHECK(out.size() == 5);
    auto kept = first_returns(out);
    for (double r : {95.0, 96.0, 97.0, 98.0, 99.0}) CHECK(kept.count(r) == 1);
  }

  SUBCASE("boundary ties are all retained") {
    auto ds = dataset_with_returns({9, 7, 7, 7, 1});
    auto out = keep_top_returns(ds, 40.0);  // cut count 2, boundary return 7
    CHECK(out.size() == 4);
    CHECK(first_returns(out).count(7.0) == 3);
  }
}

TEST_CASE("keep/filter partition the dataset at the same percent") {
  Rng rng(13);
  for (int rep = 0; rep < 30; ++rep) {
    int n = 4 + static_cast<int>(rng.index(20));
    std::vector<double> rets;
    for (int i = 0; i < n; ++i) rets.push_back(rng.uniform(0.0, 100.0));  // distinct a.s.
    auto ds = dataset_with_returns(rets);
    double percent = rng.uniform(1.0, 99.0);
    if (std::ceil(percent * n / 100.0 - 1e-9) >= n) {
      CHECK_THROWS_AS(filter_top_returns(ds, percent), UsageError);
      continue;
    }
    auto kept = keep_top_returns(ds, percent);
    auto dropped_set = filter_top_returns(ds, percent);
    CHECK(kept.size() + dropped_set.size() == ds.size());
    auto all = first_returns(kept);
    for (double r : first_returns(dropped_set)) all.insert(r);
    CHECK(all == first_returns(ds));
    // Every kept return outranks every surviving one.
    if (!kept.trajectories.empty() && !dropped_set.trajectories.empty()) {
      double min_kept = *first_returns(kept).begin();
      double max_rest = *first_returns(dropped_set).rbegin();
      CHECK(min_kept >= max_rest);
    }
  }
}
