// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corgi/saliency.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace corgi {

SaliencyScores saliency_scores(const Matrix& cross_map) {
  if (cross_map.empty()) {
    throw std::invalid_argument("saliency_scores: empty attention map");
  }
  SaliencyScores rho(cross_map.cols());
  for (std::size_t u = 0; u < cross_map.cols(); ++u) {
    double best = cross_map(0, u);
    for (std::size_t v = 1; v < cross_map.rows(); ++v) {
      best = std::max(best, cross_map(v, u));
    }
    rho[u] = best;
  }
  return rho;
}

std::vector<std::size_t> top_c_text(const SaliencyScores& scores,
                                     std::size_t c) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  order.resize(std::min(c, order.size()));
  return order;
}

KMeansResult kmeans_1d_two(const std::vector<double>& values) {
  const std::size_t n = values.size();
  KMeansResult result;
  result.in_high.assign(n, false);
  if (n == 0) return result;
  if (n == 1) {
    result.in_high[0] = true;
    result.high_indices = {0};
    result.low_centroid = result.high_centroid = values[0];
    return result;
  }

  // Ascending by value; among equal values the higher index comes first.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return a > b;
  });

  // Prefix sums of values shifted by the minimum; equal inputs give exact
  // zeros, so degenerate inputs produce exact cost ties.
  const double shift = values[order.front()];
  std::vector<double> sum(n + 1, 0.0), sum_sq(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double y = values[order[k]] - shift;
    sum[k + 1] = sum[k] + y;
    sum_sq[k + 1] = sum_sq[k] + y * y;
  }
  auto group_sse = [&](std::size_t begin, std::size_t end) {
    const double m = static_cast<double>(end - begin);
    const double s = sum[end] - sum[begin];
    const double sse = (sum_sq[end] - sum_sq[begin]) - s * s / m;
    return std::max(sse, 0.0);
  };

  std::size_t best_split = 1;
  double best_cost = group_sse(0, 1) + group_sse(1, n);
  for (std::size_t split = 2; split < n; ++split) {
    const double cost = group_sse(0, split) + group_sse(split, n);
    if (cost <= best_cost) {
      best_cost = cost;
      best_split = split;
    }
  }

  result.split = best_split;
  result.sse = best_cost;
  result.low_centroid =
      shift + sum[best_split] / static_cast<double>(best_split);
  result.high_centroid = shift + (sum[n] - sum[best_split]) /
                                     static_cast<double>(n - best_split);
  for (std::size_t k = best_split; k < n; ++k) {
    result.in_high[order[k]] = true;
    result.high_indices.push_back(order[k]);
  }
  std::sort(result.high_indices.begin(), result.high_indices.end());
  return result;
}

SalientTokenSet identify_salient(const Matrix& cross_map, std::size_t c,
                                 std::size_t block) {
  if (c < 1) throw std::invalid_argument("identify_salient: c must be >= 1");
  const SaliencyScores rho = saliency_scores(cross_map);

  SalientTokenSet s;
  s.block = block;
  s.text_indices = top_c_text(rho, c);

  std::vector<bool> image_hit(cross_map.rows(), false);
  std::vector<double> column(cross_map.rows());
  for (std::size_t u : s.text_indices) {
    for (std::size_t v = 0; v < cross_map.rows(); ++v) {
      column[v] = cross_map(v, u);
    }
    for (std::size_t v : kmeans_1d_two(column).high_indices) {
      image_hit[v] = true;
    }
  }
  for (std::size_t v = 0; v < image_hit.size(); ++v) {
    if (image_hit[v]) s.image_indices.push_back(v);
  }
  std::sort(s.text_indices.begin(), s.text_indices.end());
  return s;
}

TokenMask build_mask(const SalientTokenSet& s, std::size_t text_tokens,
                     std::size_t image_tokens) {
  TokenMask mask(text_tokens + image_tokens, 0);
  for (std::size_t u : s.text_indices) {
    if (u >= text_tokens) {
      throw std::out_of_range("build_mask: text index " + std::to_string(u) +
                              " out of range");
    }
    mask[u] = 1;
  }
  for (std::size_t v : s.image_indices) {
    if (v >= image_tokens) {
      throw std::out_of_range("build_mask: image index " + std::to_string(v) +
                              " out of range");
    }
    mask[text_tokens + v] = 1;
  }
  return mask;
}

std::vector<std::size_t> mask_rows(const SalientTokenSet& s,
                                   std::size_t text_tokens) {
  std::vector<std::size_t> rows = s.text_indices;
  for (std::size_t v : s.image_indices) rows.push_back(text_tokens + v);
  return rows;
}

std::size_t default_top_c(std::size_t text_tokens) {
  const auto c = static_cast<std::size_t>(
      std::llround(0.1 * static_cast<double>(text_tokens)));
  return std::max<std::size_t>(1, c);
}

}  // namespace corgi
