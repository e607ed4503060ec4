// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "corgi/numerics.h"

namespace corgi {

// One feature matrix per block, all the same shape.
using FeatureSnapshot = std::vector<Matrix>;
// Per-block 1 - CKA, each in [0, 1].
using ContributionVector = std::vector<double>;
// Block indices ordered by ascending contribution, ties by lower index.
using BlockRanking = std::vector<std::size_t>;

struct CkaOptions {
  // Subtract column means before comparing. Off by default: the scheduler
  // uses the uncentered form ‖YᵀX‖²_F / (‖XᵀX‖_F ‖YᵀY‖_F).
  bool centered = false;

  friend bool operator==(const CkaOptions&, const CkaOptions&) = default;
};

// Both inputs zero -> 1, exactly one zero -> 0. Result clamped to [0, 1].
double cka(const Matrix& x, const Matrix& y, CkaOptions options = {});

// score_i = 1 - cka(current_i, previous_i).
ContributionVector contribution_scores(const FeatureSnapshot& previous,
                                       const FeatureSnapshot& current,
                                       CkaOptions options = {});

BlockRanking rank_ascending(const ContributionVector& scores);

}  // namespace corgi
