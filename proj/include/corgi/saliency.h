// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Salient-token identification from an image-query x text-key attention map.
// A text token's saliency is the strongest attention any image token pays
// it; the top-c text tokens are kept, and for each of them the image tokens
// in the high cluster of an exact 1-D 2-means split of its column are added.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "corgi/numerics.h"

namespace corgi {

using SaliencyScores = std::vector<double>;

struct SalientTokenSet {
  std::size_t block = 0;
  std::vector<std::size_t> text_indices;   // ascending, in [0, L_text)
  std::vector<std::size_t> image_indices;  // ascending, in [0, L_img)

  std::size_t size() const {
    return text_indices.size() + image_indices.size();
  }
  bool empty() const { return size() == 0; }

  friend bool operator==(const SalientTokenSet&,
                         const SalientTokenSet&) = default;
};

// One entry per token, text tokens first.
using TokenMask = std::vector<std::uint8_t>;

struct KMeansResult {
  // Position in ascending sorted order where the high cluster begins.
  std::size_t split = 0;
  double low_centroid = 0.0;
  double high_centroid = 0.0;
  std::vector<bool> in_high;               // per input index
  std::vector<std::size_t> high_indices;   // ascending
  double sse = 0.0;
};

// Column maxima of a (L_img x L_text) map.
SaliencyScores saliency_scores(const Matrix& cross_map);

// Indices of the c largest scores, ordered by rank. Equal scores rank the
// lower index first. c larger than the score count selects everything.
std::vector<std::size_t> top_c_text(const SaliencyScores& scores,
                                     std::size_t c);

// Exact two-cluster partition of scalar values. The optimum is contiguous in
// sorted order, so every split point is scanned. Equal values sort with the
// lower index nearer the high end, and equal-cost splits keep the smaller
// high cluster; together these put the first argmax in the high cluster.
KMeansResult kmeans_1d_two(const std::vector<double>& values);

SalientTokenSet identify_salient(const Matrix& cross_map, std::size_t c,
                                 std::size_t block = 0);

TokenMask build_mask(const SalientTokenSet& s, std::size_t text_tokens,
                     std::size_t image_tokens);

// Token rows selected by a salient set, text first then offset image rows.
std::vector<std::size_t> mask_rows(const SalientTokenSet& s,
                                   std::size_t text_tokens);

// max(1, round(0.1 * L_text)).
std::size_t default_top_c(std::size_t text_tokens);

}  // namespace corgi
