// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "corgi/contribution.h"
#include "corgi/cost.h"
#include "corgi/policy.h"

namespace corgi {

struct RunConfig {
  CorgiConfig policy;
  ResidualStrategy residual = ResidualStrategy::kCompute;
  // Recompute salient sets at every boundary instead of only the first.
  bool refresh_saliency = false;
  // Write partially recomputed ATTN rows back into the cache.
  bool attn_write_back = false;
  CkaOptions cka;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

}  // namespace corgi
