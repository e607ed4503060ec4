// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Cached execution of the toy DiT. A cached block reuses its stored ATTN and
// FFN outputs while the residual stream is recomputed from the current
// input:
//
//   compute: out = h_t + Ẑattn + Ẑffn
//   reuse:   out = h_t̂ + Ẑattn + Ẑffn   (the whole stored output)
//
// corgi_plus additionally recomputes ATTN rows for the block's salient
// tokens and merges them over the cached rows.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "corgi/contribution.h"
#include "corgi/cost.h"
#include "corgi/policy.h"
#include "corgi/run_config.h"
#include "corgi/saliency.h"
#include "corgi/toy_dit.h"
#include "corgi/trace.h"

namespace corgi {

struct CacheEntry {
  Matrix attn_out;
  Matrix ffn_out;
  Matrix block_out;
  std::size_t cached_at = 0;  // t̂, an execution step index
};

class BlockCache {
 public:
  explicit BlockCache(std::size_t num_blocks) : entries_(num_blocks) {}

  void store(std::size_t block, const BlockOutputs& outputs, std::size_t step);
  // Throws std::runtime_error("cache miss on cached directive") when empty.
  const CacheEntry& at(std::size_t block) const;
  CacheEntry& mutable_at(std::size_t block);
  bool contains(std::size_t block) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::optional<CacheEntry>> entries_;
};

BlockOutputs execute_block_cached(const Matrix& h, const CacheEntry& entry,
                                  ResidualStrategy strategy);

// Fresh ATTN rows for the given token rows, keys and values over all of h.
Matrix partial_attention(const Block& block, const Matrix& h,
                         std::span<const std::size_t> rows);

// Row u is taken from fresh when mask[u] = 1, else from cached. `fresh` is
// either full height or holds only the masked rows in ascending order.
Matrix masked_merge(const Matrix& fresh, const Matrix& cached,
                    const TokenMask& mask);

BlockOutputs execute_block_corgi_plus(const Matrix& h, const Block& block,
                                      const CacheEntry& entry,
                                      const SalientTokenSet& salient,
                                      const TokenMask& mask,
                                      std::size_t text_tokens);

// Called after every step with the cache as it stands.
using CacheObserver =
    std::function<void(std::size_t step, const BlockCache& cache)>;

// Throws std::invalid_argument before step 0 when config and model disagree.
Trace run_with_policy(const Model& model, const Matrix& latent,
                      const Matrix& text_embed, const RunConfig& config,
                      const CacheObserver& observer = {});

}  // namespace corgi
