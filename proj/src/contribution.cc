// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corgi/contribution.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace corgi {

namespace {

Matrix center_columns(const Matrix& m) {
  Matrix out = m;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, c);
    mean /= static_cast<double>(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out(r, c) -= mean;
  }
  return out;
}

}  // namespace

double cka(const Matrix& x, const Matrix& y, CkaOptions options) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw std::invalid_argument("cka: shape mismatch");
  }
  if (x.empty()) throw std::invalid_argument("cka: empty input");
  if (options.centered) {
    return cka(center_columns(x), center_columns(y), CkaOptions{});
  }

  const double nx = frobenius_norm(matmul_tn(x, x));
  const double ny = frobenius_norm(matmul_tn(y, y));
  if (nx == 0.0 && ny == 0.0) return 1.0;
  if (nx == 0.0 || ny == 0.0) return 0.0;
  const double cross = frobenius_norm(matmul_tn(y, x));
  return std::clamp(cross * cross / (nx * ny), 0.0, 1.0);
}

ContributionVector contribution_scores(const FeatureSnapshot& previous,
                                       const FeatureSnapshot& current,
                                       CkaOptions options) {
  if (previous.size() != current.size()) {
    throw std::invalid_argument(
        "contribution_scores: block sets differ (" +
        std::to_string(previous.size()) + " vs " +
        std::to_string(current.size()) + " blocks)");
  }
  ContributionVector scores(current.size());
  for (std::size_t i = 0; i < current.size(); ++i) {
    scores[i] = 1.0 - cka(current[i], previous[i], options);
  }
  return scores;
}

BlockRanking rank_ascending(const ContributionVector& scores) {
  BlockRanking order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] < scores[b];
                   });
  return order;
}

}  // namespace corgi
