// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "corgi/contribution.h"
#include "corgi/numerics.h"
#include "corgi/toy_dit.h"
#include "corgi/trace.h"

namespace corgi {

struct DivergenceReport {
  std::vector<double> step_mse;     // predicted noise vs reference
  std::vector<double> step_cosine;  // predicted noise vs reference
  double final_mse = 0.0;
  double final_cosine = 1.0;
  bool bit_identical = false;  // every noise matrix and the final output
};

DivergenceReport divergence(const Trace& trace,
                            const ReferenceTrajectory& reference);
DivergenceReport divergence(const Trace& a, const Trace& b);

// Same record for the reference path, so a trace can be compared with it.
bool equivalent_to_reference(const Trace& trace,
                             const ReferenceTrajectory& reference);

// Per-token cosine between two (tokens x d) matrices.
std::vector<double> token_cosine(const Matrix& a, const Matrix& b);

struct AblationMap {
  std::size_t block = 0;
  // [step][image token] cosine of predicted noise, pruned vs full.
  std::vector<std::vector<double>> cosine;
  std::vector<double> step_mean;
};

// Runs the full denoising loop with `block` replaced by the identity and
// compares its predicted noise token-wise to the reference run.
AblationMap block_ablation(const Model& model, const Matrix& latent,
                           const Matrix& text_embed, std::size_t block,
                           const ReferenceTrajectory& reference);

// CKA between predicted noise at steps t and t-1, for t = 1..T-1.
std::vector<double> adjacent_step_cka(const ReferenceTrajectory& reference,
                                      CkaOptions options = {});

struct AnalysisReport {
  std::vector<AblationMap> ablations;
  std::vector<double> adjacent_cka;
};

AnalysisReport analyze(const Model& model, const Matrix& latent,
                       const Matrix& text_embed);

nlohmann::json to_json(const DivergenceReport& r);
nlohmann::json to_json(const AnalysisReport& r);

}  // namespace corgi
