// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Analytic FLOP model. Counts are multiply-accumulates on the toy DiT:
//
//   full ATTN             4·L·d² + 2·L²·d
//   full FFN              2·L·d·d_ff
//   cached (fresh resid.) L·d
//   cached (reused out)   0
//   cached + partial      3·L·d² + 2·|S|·L·d + |S|·d² + L·d

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace corgi {

enum class BlockMode { kFull, kCached, kCachedPartial };

std::string_view to_string(BlockMode mode);
BlockMode parse_block_mode(std::string_view name);

enum class ResidualStrategy { kCompute, kReuse };

std::string_view to_string(ResidualStrategy strategy);
ResidualStrategy parse_residual_strategy(std::string_view name);

struct CostDims {
  std::uint64_t tokens = 0;  // L
  std::uint64_t dim = 0;     // d
  std::uint64_t ffn_dim = 0;
  std::uint64_t heads = 1;   // not used by the formulas
};

std::uint64_t flops_attention_full(const CostDims& dims);
std::uint64_t flops_ffn_full(const CostDims& dims);

std::uint64_t flops_block(const CostDims& dims, BlockMode mode,
                          std::uint64_t salient_tokens = 0,
                          ResidualStrategy residual = ResidualStrategy::kCompute);

struct CostReport {
  std::uint64_t flops_full = 0;
  std::uint64_t flops_actual = 0;
  double speedup = 1.0;
  // Zero-cost-cached counting: every cached block counts as free.
  std::uint64_t blocks_total = 0;
  std::uint64_t blocks_computed = 0;
  double block_speedup = 1.0;
  std::vector<std::uint64_t> step_flops;
  std::vector<std::uint64_t> step_blocks_computed;

  friend bool operator==(const CostReport&, const CostReport&) = default;
};

// Per-block execution record of one step, as consumed by the cost model.
struct StepModes {
  std::vector<BlockMode> modes;
  std::vector<std::uint64_t> salient_tokens;  // per block, 0 unless partial
};

CostReport cost_from_modes(const CostDims& dims,
                           const std::vector<StepModes>& steps,
                           ResidualStrategy residual);

}  // namespace corgi
