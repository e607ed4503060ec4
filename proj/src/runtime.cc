// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corgi/runtime.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace corgi {

void BlockCache::store(std::size_t block, const BlockOutputs& outputs,
                       std::size_t step) {
  entries_.at(block) =
      CacheEntry{outputs.attn_out, outputs.ffn_out, outputs.block_out, step};
}

const CacheEntry& BlockCache::at(std::size_t block) const {
  if (block >= entries_.size() || !entries_[block]) {
    throw std::runtime_error("cache miss on cached directive");
  }
  return *entries_[block];
}

CacheEntry& BlockCache::mutable_at(std::size_t block) {
  if (block >= entries_.size() || !entries_[block]) {
    throw std::runtime_error("cache miss on cached directive");
  }
  return *entries_[block];
}

bool BlockCache::contains(std::size_t block) const {
  return block < entries_.size() && entries_[block].has_value();
}

BlockOutputs execute_block_cached(const Matrix& h, const CacheEntry& entry,
                                  ResidualStrategy strategy) {
  if (h.rows() != entry.attn_out.rows() || h.cols() != entry.attn_out.cols()) {
    throw std::invalid_argument("execute_block_cached: shape mismatch");
  }
  BlockOutputs out;
  out.attn_out = entry.attn_out;
  out.ffn_out = entry.ffn_out;
  out.block_out = strategy == ResidualStrategy::kCompute
                      ? add(add(h, entry.attn_out), entry.ffn_out)
                      : entry.block_out;
  return out;
}

Matrix partial_attention(const Block& block, const Matrix& h,
                         std::span<const std::size_t> rows) {
  return attention_rows(block, h, rows).out;
}

Matrix masked_merge(const Matrix& fresh, const Matrix& cached,
                    const TokenMask& mask) {
  if (mask.size() != cached.rows()) {
    throw std::invalid_argument("masked_merge: mask length " +
                                std::to_string(mask.size()) + " != " +
                                std::to_string(cached.rows()) + " rows");
  }
  const auto selected =
      static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
  const bool compact = fresh.rows() == selected;
  if (fresh.cols() != cached.cols() ||
      (!compact && fresh.rows() != cached.rows())) {
    throw std::invalid_argument("masked_merge: fresh rows do not match mask");
  }
  Matrix out = cached;
  std::size_t next = 0;
  for (std::size_t u = 0; u < mask.size(); ++u) {
    if (!mask[u]) continue;
    auto src = fresh.row(compact ? next++ : u);
    std::copy(src.begin(), src.end(), out.row(u).begin());
  }
  return out;
}

BlockOutputs execute_block_corgi_plus(const Matrix& h, const Block& block,
                                      const CacheEntry& entry,
                                      const SalientTokenSet& salient,
                                      const TokenMask& mask,
                                      std::size_t text_tokens) {
  if (salient.empty()) {
    return execute_block_cached(h, entry, ResidualStrategy::kCompute);
  }
  const auto rows = mask_rows(salient, text_tokens);
  BlockOutputs out;
  out.attn_out = masked_merge(partial_attention(block, h, rows),
                              entry.attn_out, mask);
  out.ffn_out = entry.ffn_out;
  out.block_out = add(add(h, out.attn_out), out.ffn_out);
  return out;
}

namespace {

FeatureSnapshot snapshot_of(const std::vector<BlockOutputs>& outs) {
  FeatureSnapshot snap;
  snap.reserve(outs.size());
  for (const auto& o : outs) snap.push_back(o.block_out);
  return snap;
}

class Engine {
 public:
  Engine(const Model& model, const RunConfig& config,
         const CacheObserver& observer)
      : model_(model),
        config_(config),
        observer_(observer),
        dims_(model.config),
        warmup_(config.policy.resolved_warmup(dims_.total_steps)),
        top_c_(config.policy.top_c.value_or(default_top_c(dims_.text_tokens))),
        cache_(dims_.num_blocks) {
    config.policy.validate(dims_.total_steps, dims_.num_blocks);
    if (model.blocks.size() != dims_.num_blocks) {
      throw std::invalid_argument("model has " +
                                  std::to_string(model.blocks.size()) +
                                  " blocks, config says " +
                                  std::to_string(dims_.num_blocks));
    }
    if (is_interval_policy(kind())) {
      roles_ = plan_steps(dims_.total_steps, warmup_, config.policy.interval);
    }
  }

  Trace run(const Matrix& latent, const Matrix& text_embed) {
    Trace trace;
    trace.model = dims_;
    trace.model_seed = model_.seed;
    trace.run = config_;

    Matrix x = latent;
    for (std::size_t step = 0; step < dims_.total_steps; ++step) {
      const CacheDirective directive = directive_for(step, trace);
      Matrix h = embed_tokens(model_, x, text_embed, step);

      StepRecord rec;
      rec.step = step;
      rec.role = directive.role;
      rec.cached = directive.cached;
      rec.modes.assign(dims_.num_blocks, BlockMode::kFull);
      rec.salient_tokens.assign(dims_.num_blocks, 0);

      std::vector<BlockOutputs> outs;
      outs.reserve(dims_.num_blocks);
      for (std::size_t i = 0; i < dims_.num_blocks; ++i) {
        const bool cached = std::binary_search(directive.cached.begin(),
                                               directive.cached.end(), i);
        outs.push_back(cached ? run_cached(i, h, step, rec)
                              : run_full(i, h, step));
        h = outs.back().block_out;
      }

      after_step(step, directive.role, outs, trace);

      Matrix eps = predict_noise(model_, h);
      x = denoise_step_mean(x, eps, timestep_for(step, dims_.total_steps),
                            model_.schedule);
      rec.hidden_checksum = checksum(h);
      rec.noise = std::move(eps);
      trace.steps.push_back(std::move(rec));
      if (observer_) observer_(step, cache_);
    }
    trace.final_output = std::move(x);
    trace.cost = cost_report(trace);
    return trace;
  }

 private:
  PolicyKind kind() const { return config_.policy.policy; }

  CacheDirective directive_for(std::size_t step, Trace& trace) {
    if (is_interval_policy(kind())) {
      return interval_directive(step, roles_[step], ranking_,
                                config_.policy.gamma, config_.policy.delta);
    }
    BaselineContext ctx;
    ctx.step = step;
    ctx.num_blocks = dims_.num_blocks;
    ctx.warmup = warmup_;
    ctx.parity = config_.policy.parity;
    ctx.seed = config_.policy.seed;
    if (kind() == PolicyKind::kPerStepNaive &&
        baseline_caches_at(step, warmup_)) {
      // Rank on the two most recent executed steps; with only one available
      // every score is zero and the ranking falls back to block order.
      const FeatureSnapshot& older =
          previous_step_.empty() ? last_step_ : previous_step_;
      ContributionVector scores =
          contribution_scores(older, last_step_, config_.cka);
      ctx.ranking = rank_ascending(scores);
      trace.contributions.push_back({step, std::move(scores), ctx.ranking});
    }
    return baseline_directive(kind(), ctx);
  }

  BlockOutputs run_full(std::size_t i, const Matrix& h, std::size_t step) {
    BlockOutputs out = block_forward(model_.blocks[i], h, dims_.text_tokens);
    cache_.store(i, out, step);
    return out;
  }

  BlockOutputs run_cached(std::size_t i, const Matrix& h, std::size_t step,
                          StepRecord& rec) {
    const CacheEntry& entry = cache_.at(i);
    if (entry.cached_at >= step) {
      throw std::logic_error("cache entry is not older than the current step");
    }
    if (kind() == PolicyKind::kCorgiPlus && !salient_.empty() &&
        !salient_[i].empty()) {
      BlockOutputs out =
          execute_block_corgi_plus(h, model_.blocks[i], entry, salient_[i],
                                   masks_[i], dims_.text_tokens);
      rec.modes[i] = BlockMode::kCachedPartial;
      rec.salient_tokens[i] = salient_[i].size();
      if (config_.attn_write_back) {
        cache_.mutable_at(i).attn_out = out.attn_out;
      }
      return out;
    }
    rec.modes[i] = BlockMode::kCached;
    return execute_block_cached(h, entry, config_.residual);
  }

  void after_step(std::size_t step, const StepRole& role,
                  const std::vector<BlockOutputs>& outs, Trace& trace) {
    FeatureSnapshot snap = snapshot_of(outs);
    if (is_interval_policy(kind()) && role.kind == StepRole::Kind::kBoundary) {
      // First boundary compares against the last warm-up step, or itself
      // when there was no warm-up.
      const FeatureSnapshot& reference =
          boundary_reference_.empty() ? snap : boundary_reference_;
      ContributionVector scores =
          contribution_scores(reference, snap, config_.cka);
      ranking_ = rank_ascending(scores);
      trace.contributions.push_back({step, std::move(scores), ranking_});

      if (kind() == PolicyKind::kCorgiPlus &&
          (salient_.empty() || config_.refresh_saliency)) {
        identify_all(step, outs, trace);
      }
    }
    if (is_interval_policy(kind()) && role.kind != StepRole::Kind::kIntra) {
      boundary_reference_ = snap;
    }
    previous_step_ = std::move(last_step_);
    last_step_ = std::move(snap);
  }

  void identify_all(std::size_t step, const std::vector<BlockOutputs>& outs,
                    Trace& trace) {
    salient_.clear();
    masks_.clear();
    for (std::size_t i = 0; i < outs.size(); ++i) {
      salient_.push_back(identify_salient(outs[i].cross_map, top_c_, i));
      masks_.push_back(build_mask(salient_.back(), dims_.text_tokens,
                                  dims_.image_tokens));
    }
    trace.saliency.push_back({step, salient_});
  }

  const Model& model_;
  const RunConfig& config_;
  const CacheObserver& observer_;
  const ModelConfig& dims_;
  std::size_t warmup_;
  std::size_t top_c_;
  BlockCache cache_;
  std::vector<StepRole> roles_;
  BlockRanking ranking_;
  FeatureSnapshot boundary_reference_;
  FeatureSnapshot last_step_;
  FeatureSnapshot previous_step_;
  std::vector<SalientTokenSet> salient_;
  std::vector<TokenMask> masks_;
};

}  // namespace

Trace run_with_policy(const Model& model, const Matrix& latent,
                      const Matrix& text_embed, const RunConfig& config,
                      const CacheObserver& observer) {
  Engine engine(model, config, observer);
  return engine.run(latent, text_embed);
}

}  // namespace corgi
