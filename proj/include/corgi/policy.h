// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Cache scheduling. After ω warm-up steps the run is cut into intervals of D
// steps. The first step of an interval (a boundary) computes every block and
// ranks blocks by contribution; intra-step j of the interval caches the
// min(γ + (j-1)δ, B) lowest-contribution blocks of that ranking.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corgi/contribution.h"

namespace corgi {

enum class PolicyKind { kNone, kCorgi, kCorgiPlus, kPerStepNaive, kParity, kRandom };

std::string_view to_string(PolicyKind kind);
// Throws std::invalid_argument on an unknown name.
PolicyKind parse_policy_kind(std::string_view name);
bool is_interval_policy(PolicyKind kind);

enum class Parity { kEven, kOdd };

std::string_view to_string(Parity parity);
Parity parse_parity(std::string_view name);

struct CorgiConfig {
  PolicyKind policy = PolicyKind::kCorgi;
  // Unset means round(0.2 * T).
  std::optional<std::size_t> warmup;
  std::size_t interval = 5;
  std::size_t gamma = 3;
  std::size_t delta = 1;
  // Unset means max(1, round(0.1 * L_text)).
  std::optional<std::size_t> top_c;
  Parity parity = Parity::kEven;
  std::uint64_t seed = 0;

  std::size_t resolved_warmup(std::size_t total_steps) const;
  void validate(std::size_t total_steps, std::size_t num_blocks) const;

  friend bool operator==(const CorgiConfig&, const CorgiConfig&) = default;
};

std::size_t default_warmup(std::size_t total_steps);

struct StepRole {
  enum class Kind { kWarmup, kBoundary, kIntra };
  Kind kind = Kind::kWarmup;
  // Offset j within the interval; 0 unless kIntra.
  std::size_t offset = 0;

  static StepRole warmup() { return {Kind::kWarmup, 0}; }
  static StepRole boundary() { return {Kind::kBoundary, 0}; }
  static StepRole intra(std::size_t j) { return {Kind::kIntra, j}; }

  friend bool operator==(const StepRole&, const StepRole&) = default;
};

std::string to_string(const StepRole& role);
StepRole parse_step_role(std::string_view text);

struct CacheDirective {
  std::size_t step = 0;
  StepRole role;
  std::vector<std::size_t> cached;  // ascending block indices

  friend bool operator==(const CacheDirective&, const CacheDirective&) = default;
};

std::vector<StepRole> plan_steps(std::size_t total_steps, std::size_t warmup,
                                 std::size_t interval);

std::size_t cached_count(std::size_t j, std::size_t gamma, std::size_t delta,
                         std::size_t num_blocks);

// First `count` entries of the ranking, returned ascending.
std::vector<std::size_t> select_cached(const BlockRanking& ranking,
                                       std::size_t count);

// Directive for an interval policy at one step.
CacheDirective interval_directive(std::size_t step, const StepRole& role,
                                  const BlockRanking& ranking,
                                  std::size_t gamma, std::size_t delta);

// Full directive list for a fixed ranking.
std::vector<CacheDirective> plan_directives(std::size_t total_steps,
                                            std::size_t warmup,
                                            std::size_t interval,
                                            std::size_t gamma,
                                            std::size_t delta,
                                            const BlockRanking& ranking);

struct BaselineContext {
  std::size_t step = 0;
  std::size_t num_blocks = 0;
  std::size_t warmup = 0;
  // Ranking from the two most recent steps; used by kPerStepNaive only.
  BlockRanking ranking;
  Parity parity = Parity::kEven;
  std::uint64_t seed = 0;
};

// Baselines cache nothing before max(ω, 1): step 0 has nothing to reuse.
bool baseline_caches_at(std::size_t step, std::size_t warmup);

CacheDirective baseline_directive(PolicyKind kind, const BaselineContext& ctx);

}  // namespace corgi
