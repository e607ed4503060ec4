// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corgi/contribution.h"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "oracles.h"

namespace corgi {
namespace {

TEST_CASE("cka hand values") {
  Matrix e1 = Matrix::from_rows({{1.0}, {0.0}});
  Matrix e2 = Matrix::from_rows({{0.0}, {1.0}});
  Matrix ones = Matrix::from_rows({{1.0}, {1.0}});
  CHECK(cka(e1, e1) == 1.0);
  CHECK(cka(e1, e2) == 0.0);
  CHECK(std::abs(cka(e1, ones) - 0.5) < 1e-15);
}

TEST_CASE("cka degenerate norms") {
  Matrix zero(3, 2);
  Matrix x = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  CHECK(cka(zero, zero) == 1.0);
  CHECK(cka(zero, x) == 0.0);
  CHECK(cka(x, zero) == 0.0);
}

TEST_CASE("cka rejects bad shapes") {
  CHECK_THROWS_AS(cka(Matrix(2, 3), Matrix(3, 2)), std::invalid_argument);
  CHECK_THROWS_AS(cka(Matrix(), Matrix()), std::invalid_argument);
}

TEST_CASE("cka agrees with the straight-line evaluation") {
  std::mt19937_64 gen(10);
  std::uniform_int_distribution<std::size_t> dim(1, 16);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = dim(gen), d = dim(gen);
    Matrix x = oracle::random_matrix(gen, n, d);
    Matrix y = oracle::random_matrix(gen, n, d);
    const double got = cka(x, y);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
    CHECK(std::abs(got - oracle::cka_straight_line(x, y)) < 1e-12);
    CHECK(std::abs(got - cka(y, x)) < 1e-12);
    CHECK(std::abs(cka(x, x) - 1.0) < 1e-12);
  }
}

TEST_CASE("centered cka is invariant to column shifts") {
  std::mt19937_64 gen(11);
  Matrix x = oracle::random_matrix(gen, 10, 4);
  Matrix y = oracle::random_matrix(gen, 10, 4);
  Matrix shifted = x;
  for (std::size_t r = 0; r < 10; ++r) {
    for (std::size_t c = 0; c < 4; ++c) shifted(r, c) += 3.0 * (c + 1.0);
  }
  CkaOptions centered{true};
  CHECK(std::abs(cka(x, y, centered) - cka(shifted, y, centered)) < 1e-12);
  CHECK(std::abs(cka(x, y) - cka(shifted, y)) > 1e-6);
}

TEST_CASE("contribution scores") {
  std::mt19937_64 gen(12);
  FeatureSnapshot prev, cur;
  for (int i = 0; i < 4; ++i) {
    prev.push_back(oracle::random_matrix(gen, 6, 3));
    cur.push_back(oracle::random_matrix(gen, 6, 3));
  }
  ContributionVector same = contribution_scores(prev, prev);
  for (double s : same) CHECK(std::abs(s) < 1e-12);

  ContributionVector scores = contribution_scores(prev, cur);
  REQUIRE(scores.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(scores[i] >= 0.0);
    CHECK(scores[i] <= 1.0);
    const double expect = 1.0 - oracle::cka_straight_line(cur[i], prev[i]);
    CHECK(std::abs(scores[i] - expect) < 1e-12);
  }

  FeatureSnapshot orth_prev{Matrix::from_rows({{1.0}, {0.0}})};
  FeatureSnapshot orth_cur{Matrix::from_rows({{0.0}, {1.0}})};
  CHECK(contribution_scores(orth_prev, orth_cur)[0] == 1.0);

  prev.pop_back();
  CHECK_THROWS_AS(contribution_scores(prev, cur), std::invalid_argument);
}

TEST_CASE("ascending rank") {
  CHECK(rank_ascending({0.3, 0.1, 0.2}) == BlockRanking{1, 2, 0});
  CHECK(rank_ascending({0.5, 0.5, 0.5, 0.5}) == BlockRanking{0, 1, 2, 3});
  CHECK(rank_ascending({}).empty());

  std::mt19937_64 gen(13);
  std::uniform_int_distribution<int> coarse(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    ContributionVector scores(8);
    // Coarse values force ties so the stable order is exercised.
    for (double& s : scores) s = coarse(gen) / 4.0;
    BlockRanking expect;
    oracle::selection_sort_ascending(scores, expect);
    CHECK(rank_ascending(scores) == expect);
  }
}

}  // namespace
}  // namespace corgi
