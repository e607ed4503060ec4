// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corgi/policy.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "corgi/numerics.h"

namespace corgi {

namespace {

constexpr std::uint64_t kRandomPolicyStream = 0x72616e64;  // "rand"

struct KindName {
  PolicyKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {PolicyKind::kNone, "none"},
    {PolicyKind::kCorgi, "corgi"},
    {PolicyKind::kCorgiPlus, "corgi_plus"},
    {PolicyKind::kPerStepNaive, "per_step_naive"},
    {PolicyKind::kParity, "parity"},
    {PolicyKind::kRandom, "random"},
};

}  // namespace

std::string_view to_string(PolicyKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (const auto& k : kKindNames) {
    if (k.name == name) return k.kind;
  }
  throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

bool is_interval_policy(PolicyKind kind) {
  return kind == PolicyKind::kCorgi || kind == PolicyKind::kCorgiPlus;
}

std::string_view to_string(Parity parity) {
  return parity == Parity::kEven ? "even" : "odd";
}

Parity parse_parity(std::string_view name) {
  if (name == "even") return Parity::kEven;
  if (name == "odd") return Parity::kOdd;
  throw std::invalid_argument("unknown parity '" + std::string(name) + "'");
}

std::size_t default_warmup(std::size_t total_steps) {
  return static_cast<std::size_t>(
      std::llround(0.2 * static_cast<double>(total_steps)));
}

std::size_t CorgiConfig::resolved_warmup(std::size_t total_steps) const {
  return warmup.value_or(default_warmup(total_steps));
}

void CorgiConfig::validate(std::size_t total_steps,
                           std::size_t num_blocks) const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid policy config: " + what);
  };
  if (resolved_warmup(total_steps) > total_steps) fail("warmup must be <= T");
  if (interval < 1) fail("interval must be >= 1");
  if (gamma > num_blocks) fail("gamma must be <= number of blocks");
  if (top_c && *top_c < 1) fail("top_c must be >= 1");
}

std::string to_string(const StepRole& role) {
  switch (role.kind) {
    case StepRole::Kind::kWarmup:
      return "W";
    case StepRole::Kind::kBoundary:
      return "B";
    case StepRole::Kind::kIntra:
      return "I" + std::to_string(role.offset);
  }
  return "?";
}

StepRole parse_step_role(std::string_view text) {
  if (text == "W") return StepRole::warmup();
  if (text == "B") return StepRole::boundary();
  if (text.size() > 1 && text.front() == 'I') {
    return StepRole::intra(std::stoul(std::string(text.substr(1))));
  }
  throw std::invalid_argument("bad step role '" + std::string(text) + "'");
}

std::vector<StepRole> plan_steps(std::size_t total_steps, std::size_t warmup,
                                 std::size_t interval) {
  if (warmup > total_steps) {
    throw std::invalid_argument("plan_steps: warmup exceeds total steps");
  }
  if (interval < 1) throw std::invalid_argument("plan_steps: interval < 1");
  std::vector<StepRole> roles;
  roles.reserve(total_steps);
  for (std::size_t k = 0; k < total_steps; ++k) {
    if (k < warmup) {
      roles.push_back(StepRole::warmup());
    } else if (const std::size_t j = (k - warmup) % interval; j == 0) {
      roles.push_back(StepRole::boundary());
    } else {
      roles.push_back(StepRole::intra(j));
    }
  }
  return roles;
}

std::size_t cached_count(std::size_t j, std::size_t gamma, std::size_t delta,
                         std::size_t num_blocks) {
  if (j < 1) throw std::invalid_argument("cached_count: j must be >= 1");
  if (gamma >= num_blocks) return num_blocks;
  // Compare without forming (j-1)*delta when it could overflow.
  const std::size_t room = num_blocks - gamma;
  if (delta != 0 && j - 1 > room / delta) return num_blocks;
  return std::min(gamma + (j - 1) * delta, num_blocks);
}

std::vector<std::size_t> select_cached(const BlockRanking& ranking,
                                       std::size_t count) {
  if (count > ranking.size()) {
    throw std::invalid_argument("select_cached: count exceeds block count");
  }
  std::vector<std::size_t> out(ranking.begin(), ranking.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

CacheDirective interval_directive(std::size_t step, const StepRole& role,
                                  const BlockRanking& ranking,
                                  std::size_t gamma, std::size_t delta) {
  CacheDirective d{step, role, {}};
  if (role.kind == StepRole::Kind::kIntra) {
    d.cached = select_cached(
        ranking, cached_count(role.offset, gamma, delta, ranking.size()));
  }
  return d;
}

std::vector<CacheDirective> plan_directives(std::size_t total_steps,
                                            std::size_t warmup,
                                            std::size_t interval,
                                            std::size_t gamma,
                                            std::size_t delta,
                                            const BlockRanking& ranking) {
  const auto roles = plan_steps(total_steps, warmup, interval);
  std::vector<CacheDirective> out;
  out.reserve(roles.size());
  for (std::size_t k = 0; k < roles.size(); ++k) {
    out.push_back(interval_directive(k, roles[k], ranking, gamma, delta));
  }
  return out;
}

bool baseline_caches_at(std::size_t step, std::size_t warmup) {
  return step >= std::max<std::size_t>(warmup, 1);
}

CacheDirective baseline_directive(PolicyKind kind, const BaselineContext& ctx) {
  const bool active = baseline_caches_at(ctx.step, ctx.warmup);
  CacheDirective d{ctx.step,
                   active ? StepRole::intra(1) : StepRole::warmup(),
                   {}};
  if (!active) return d;
  const std::size_t half = ctx.num_blocks / 2;

  switch (kind) {
    case PolicyKind::kNone:
      d.role = StepRole::boundary();
      break;
    case PolicyKind::kPerStepNaive:
      if (ctx.ranking.size() != ctx.num_blocks) {
        throw std::invalid_argument("per_step_naive: ranking size mismatch");
      }
      d.cached = select_cached(ctx.ranking, half);
      break;
    case PolicyKind::kParity: {
      const std::size_t first = ctx.parity == Parity::kEven ? 0 : 1;
      for (std::size_t i = first; i < ctx.num_blocks; i += 2) {
        d.cached.push_back(i);
      }
      break;
    }
    case PolicyKind::kRandom: {
      SeededRng rng = SeededRng::derive(ctx.seed, kRandomPolicyStream + ctx.step);
      std::vector<std::size_t> pool(ctx.num_blocks);
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < half; ++i) {
        const std::size_t pick = i + rng.next_below(pool.size() - i);
        std::swap(pool[i], pool[pick]);
      }
      d.cached.assign(pool.begin(), pool.begin() + half);
      std::sort(d.cached.begin(), d.cached.end());
      break;
    }
    case PolicyKind::kCorgi:
    case PolicyKind::kCorgiPlus:
      throw std::invalid_argument("baseline_directive: " +
                                  std::string(to_string(kind)) +
                                  " is not a baseline policy");
  }
  return d;
}

}  // namespace corgi
