// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corgi/cost.h"

#include <stdexcept>
#include <string>

namespace corgi {

std::string_view to_string(BlockMode mode) {
  switch (mode) {
    case BlockMode::kFull:
      return "full";
    case BlockMode::kCached:
      return "cached";
    case BlockMode::kCachedPartial:
      return "cached+partial";
  }
  return "unknown";
}

BlockMode parse_block_mode(std::string_view name) {
  if (name == "full") return BlockMode::kFull;
  if (name == "cached") return BlockMode::kCached;
  if (name == "cached+partial") return BlockMode::kCachedPartial;
  throw std::invalid_argument("unknown block mode '" + std::string(name) + "'");
}

std::string_view to_string(ResidualStrategy strategy) {
  return strategy == ResidualStrategy::kCompute ? "compute" : "reuse";
}

ResidualStrategy parse_residual_strategy(std::string_view name) {
  if (name == "compute") return ResidualStrategy::kCompute;
  if (name == "reuse") return ResidualStrategy::kReuse;
  throw std::invalid_argument("unknown residual strategy '" +
                              std::string(name) + "'");
}

std::uint64_t flops_attention_full(const CostDims& dims) {
  const std::uint64_t l = dims.tokens, d = dims.dim;
  return 4 * l * d * d + 2 * l * l * d;
}

std::uint64_t flops_ffn_full(const CostDims& dims) {
  return 2 * dims.tokens * dims.dim * dims.ffn_dim;
}

std::uint64_t flops_block(const CostDims& dims, BlockMode mode,
                          std::uint64_t salient_tokens,
                          ResidualStrategy residual) {
  const std::uint64_t l = dims.tokens, d = dims.dim, s = salient_tokens;
  switch (mode) {
    case BlockMode::kFull:
      return flops_attention_full(dims) + flops_ffn_full(dims);
    case BlockMode::kCached:
      return residual == ResidualStrategy::kCompute ? l * d : 0;
    case BlockMode::kCachedPartial:
      return 3 * l * d * d + 2 * s * l * d + s * d * d + l * d;
  }
  return 0;
}

CostReport cost_from_modes(const CostDims& dims,
                           const std::vector<StepModes>& steps,
                           ResidualStrategy residual) {
  CostReport report;
  const std::uint64_t full_block = flops_block(dims, BlockMode::kFull);
  for (const StepModes& step : steps) {
    if (step.salient_tokens.size() != step.modes.size()) {
      throw std::invalid_argument("cost: incomplete step record");
    }
    std::uint64_t flops = 0, computed = 0;
    for (std::size_t i = 0; i < step.modes.size(); ++i) {
      flops += flops_block(dims, step.modes[i], step.salient_tokens[i], residual);
      if (step.modes[i] == BlockMode::kFull) ++computed;
    }
    report.flops_full += full_block * step.modes.size();
    report.flops_actual += flops;
    report.blocks_total += step.modes.size();
    report.blocks_computed += computed;
    report.step_flops.push_back(flops);
    report.step_blocks_computed.push_back(computed);
  }
  if (report.flops_actual > 0) {
    report.speedup = static_cast<double>(report.flops_full) /
                     static_cast<double>(report.flops_actual);
  }
  if (report.blocks_computed > 0) {
    report.block_speedup = static_cast<double>(report.blocks_total) /
                           static_cast<double>(report.blocks_computed);
  }
  return report;
}

}  // namespace corgi
