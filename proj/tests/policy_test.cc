// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corgi/policy.h"

#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "oracles.h"

namespace corgi {
namespace {

using Indices = std::vector<std::size_t>;

std::string role_string(const std::vector<StepRole>& roles) {
  std::string s;
  for (const StepRole& r : roles) {
    if (!s.empty()) s += ",";
    s += to_string(r);
  }
  return s;
}

TEST_CASE("step roles") {
  CHECK(role_string(plan_steps(12, 2, 5)) ==
        "W,W,B,I1,I2,I3,I4,B,I1,I2,I3,I4");
  CHECK(role_string(plan_steps(6, 1, 1)) == "W,B,B,B,B,B");
  CHECK(role_string(plan_steps(4, 4, 3)) == "W,W,W,W");
  CHECK(role_string(plan_steps(7, 0, 3)) == "B,I1,I2,B,I1,I2,B");
  CHECK(plan_steps(0, 0, 1).empty());
  CHECK_THROWS_AS(plan_steps(3, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(plan_steps(3, 0, 0), std::invalid_argument);
}

TEST_CASE("role strings round trip") {
  for (const StepRole& r : plan_steps(20, 3, 7)) {
    CHECK(parse_step_role(to_string(r)) == r);
  }
  CHECK_THROWS_AS(parse_step_role("X"), std::invalid_argument);
  CHECK_THROWS_AS(parse_step_role("I"), std::invalid_argument);
}

TEST_CASE("cached counts") {
  CHECK(cached_count(1, 30, 2, 60) == 30);
  CHECK(cached_count(2, 7, 2, 8) == 8);
  CHECK(cached_count(4, 3, 1, 8) == 6);
  CHECK(cached_count(1, 0, 0, 8) == 0);
  CHECK(cached_count(100, 0, 0, 8) == 0);
  CHECK(cached_count(3, 9, 0, 8) == 8);
  const auto huge = std::numeric_limits<std::size_t>::max();
  CHECK(cached_count(huge, 1, huge, 8) == 8);
  CHECK_THROWS_AS(cached_count(0, 1, 1, 8), std::invalid_argument);
}

TEST_CASE("cached selection is a sorted ranking prefix") {
  CHECK(select_cached({1, 2, 0}, 2) == Indices{1, 2});
  CHECK(select_cached({1, 2, 0}, 0).empty());
  CHECK_THROWS_AS(select_cached({1, 2, 0}, 4), std::invalid_argument);

  const BlockRanking r{5, 3, 7, 0, 1, 6, 2, 4};
  for (std::size_t m = 0; m <= 8; ++m) {
    const Indices small = select_cached(r, m);
    for (std::size_t n = m; n <= 8; ++n) {
      const Indices big = select_cached(r, n);
      CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
    }
  }
}

TEST_CASE("directive lists") {
  const BlockRanking r{4, 1, 6, 0, 2, 7, 3, 5};
  const auto ds = plan_directives(12, 2, 5, 3, 1, r);
  REQUIRE(ds.size() == 12);
  std::vector<std::size_t> counts;
  for (const auto& d : ds) counts.push_back(d.cached.size());
  CHECK(counts == Indices{0, 0, 0, 3, 4, 5, 6, 0, 3, 4, 5, 6});
  CHECK(ds[3].cached == Indices{1, 4, 6});
  CHECK(ds[4].cached == Indices{0, 1, 4, 6});
  for (std::size_t k = 0; k < ds.size(); ++k) {
    CHECK(ds[k].step == k);
    if (ds[k].role.kind != StepRole::Kind::kIntra) CHECK(ds[k].cached.empty());
  }
  CHECK(plan_directives(12, 2, 5, 3, 1, r) == ds);
}

TEST_CASE("directive counts match the enumeration oracle") {
  std::mt19937_64 gen(30);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t blocks = 1 + gen() % 16;
    const std::size_t steps = 1 + gen() % 40;
    const std::size_t warmup = gen() % (steps + 1);
    const std::size_t interval = 1 + gen() % 8;
    const std::size_t gamma = gen() % (blocks + 1);
    const std::size_t delta = gen() % 4;
    BlockRanking ranking(blocks);
    std::iota(ranking.begin(), ranking.end(), std::size_t{0});
    std::shuffle(ranking.begin(), ranking.end(), gen);
    const auto ds =
        plan_directives(steps, warmup, interval, gamma, delta, ranking);
    const auto expect = oracle::enumerate_computed_blocks(
        steps, warmup, interval, gamma, delta, blocks);
    for (std::size_t k = 0; k < steps; ++k) {
      CHECK(blocks - ds[k].cached.size() == expect[k]);
    }
  }
}

TEST_CASE("config validation and defaults") {
  CorgiConfig c;
  CHECK(c.resolved_warmup(12) == 2);
  CHECK(c.resolved_warmup(50) == 10);
  CHECK(default_warmup(28) == 6);
  c.warmup = 0;
  CHECK(c.resolved_warmup(12) == 0);
  CHECK_NOTHROW(c.validate(12, 8));

  CorgiConfig bad;
  bad.warmup = 13;
  CHECK_THROWS_WITH_AS(bad.validate(12, 8), doctest::Contains("warmup"),
                       std::invalid_argument);
  bad = {};
  bad.interval = 0;
  CHECK_THROWS_WITH_AS(bad.validate(12, 8), doctest::Contains("interval"),
                       std::invalid_argument);
  bad = {};
  bad.gamma = 9;
  CHECK_THROWS_WITH_AS(bad.validate(12, 8), doctest::Contains("gamma"),
                       std::invalid_argument);
  bad = {};
  bad.top_c = 0;
  CHECK_THROWS_WITH_AS(bad.validate(12, 8), doctest::Contains("top_c"),
                       std::invalid_argument);
}

TEST_CASE("policy names") {
  for (PolicyKind k : {PolicyKind::kNone, PolicyKind::kCorgi,
                       PolicyKind::kCorgiPlus, PolicyKind::kPerStepNaive,
                       PolicyKind::kParity, PolicyKind::kRandom}) {
    CHECK(parse_policy_kind(to_string(k)) == k);
  }
  CHECK(to_string(PolicyKind::kCorgiPlus) == "corgi_plus");
  CHECK_THROWS_AS(parse_policy_kind("fast"), std::invalid_argument);
  CHECK(parse_parity("odd") == Parity::kOdd);
  CHECK_THROWS_AS(parse_parity("both"), std::invalid_argument);
  CHECK(is_interval_policy(PolicyKind::kCorgi));
  CHECK(is_interval_policy(PolicyKind::kCorgiPlus));
  CHECK_FALSE(is_interval_policy(PolicyKind::kParity));
}

TEST_CASE("baseline directives") {
  BaselineContext ctx;
  ctx.num_blocks = 8;
  ctx.warmup = 2;

  for (std::size_t step = 0; step < 10; ++step) {
    ctx.step = step;
    CHECK(baseline_directive(PolicyKind::kNone, ctx).cached.empty());
    const auto parity = baseline_directive(PolicyKind::kParity, ctx);
    if (step < 2) {
      CHECK(parity.cached.empty());
      CHECK(parity.role == StepRole::warmup());
    } else {
      CHECK(parity.cached == Indices{0, 2, 4, 6});
    }
  }

  ctx.step = 5;
  ctx.parity = Parity::kOdd;
  CHECK(baseline_directive(PolicyKind::kParity, ctx).cached ==
        Indices{1, 3, 5, 7});

  ctx.ranking = {7, 6, 5, 4, 3, 2, 1, 0};
  CHECK(baseline_directive(PolicyKind::kPerStepNaive, ctx).cached ==
        Indices{4, 5, 6, 7});
  ctx.ranking = {0, 1};
  CHECK_THROWS_AS(baseline_directive(PolicyKind::kPerStepNaive, ctx),
                  std::invalid_argument);

  CHECK_THROWS_AS(baseline_directive(PolicyKind::kCorgi, ctx),
                  std::invalid_argument);
}

TEST_CASE("baselines never cache at step zero") {
  CHECK_FALSE(baseline_caches_at(0, 0));
  CHECK(baseline_caches_at(1, 0));
  CHECK_FALSE(baseline_caches_at(2, 3));
  CHECK(baseline_caches_at(3, 3));
}

TEST_CASE("random baseline draws half the blocks per step") {
  BaselineContext ctx;
  ctx.num_blocks = 8;
  ctx.warmup = 1;
  ctx.seed = 17;
  std::set<Indices> distinct;
  for (std::size_t step = 1; step < 30; ++step) {
    ctx.step = step;
    const Indices a = baseline_directive(PolicyKind::kRandom, ctx).cached;
    CHECK(a.size() == 4);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
    CHECK(a.back() < 8);
    CHECK(baseline_directive(PolicyKind::kRandom, ctx).cached == a);
    distinct.insert(a);
  }
  CHECK(distinct.size() > 5);

  ctx.num_blocks = 1;
  ctx.step = 3;
  CHECK(baseline_directive(PolicyKind::kRandom, ctx).cached.empty());
}

}  // namespace
}  // namespace corgi
