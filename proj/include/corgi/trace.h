// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Run record and its JSON form ("corgi-trace/1"). Doubles are written with
// round-trip precision and checksums as 16-digit hex strings.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "corgi/cost.h"
#include "corgi/numerics.h"
#include "corgi/policy.h"
#include "corgi/run_config.h"
#include "corgi/saliency.h"
#include "corgi/toy_dit.h"

namespace corgi {

inline constexpr const char* kTraceSchema = "corgi-trace/1";

struct StepRecord {
  std::size_t step = 0;
  StepRole role;
  std::vector<std::size_t> cached;  // directive as applied
  std::vector<BlockMode> modes;     // per block
  std::vector<std::uint64_t> salient_tokens;  // per block, partial mode only
  std::uint64_t hidden_checksum = 0;  // last block output of this step
  Matrix noise;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct ContributionRecord {
  std::size_t step = 0;
  ContributionVector scores;
  BlockRanking ranking;

  friend bool operator==(const ContributionRecord&,
                         const ContributionRecord&) = default;
};

struct SaliencyRecord {
  std::size_t step = 0;
  std::vector<SalientTokenSet> sets;  // one per block

  friend bool operator==(const SaliencyRecord&, const SaliencyRecord&) = default;
};

struct Trace {
  ModelConfig model;
  std::uint64_t model_seed = 0;
  std::optional<std::uint64_t> input_seed;
  RunConfig run;
  std::vector<StepRecord> steps;
  std::vector<ContributionRecord> contributions;
  std::vector<SaliencyRecord> saliency;
  Matrix final_output;
  CostReport cost;

  friend bool operator==(const Trace&, const Trace&) = default;
};

CostDims cost_dims(const ModelConfig& config);
// Throws std::invalid_argument when the trace does not cover T steps of B
// blocks.
CostReport cost_report(const Trace& trace);

nlohmann::json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CostReport& r);
CostReport cost_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Trace& t);
// Throws std::invalid_argument on a schema mismatch or malformed document.
Trace trace_from_json(const nlohmann::json& j);

// Pretty-printed document. A timestamp, when given, is stored under
// "generated_at" and ignored by trace_from_json.
std::string serialize_trace(const Trace& t,
                            const std::optional<std::string>& timestamp = {});
Trace parse_trace(const std::string& text);

std::string hex64(std::uint64_t v);
std::uint64_t parse_hex64(const std::string& s);

}  // namespace corgi
