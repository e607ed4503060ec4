// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corgi/trace.h"

#include <cstdio>
#include <stdexcept>

namespace corgi {

using nlohmann::json;

namespace {

json to_json(const SalientTokenSet& s) {
  return {{"block", s.block},
          {"text", s.text_indices},
          {"image", s.image_indices}};
}

SalientTokenSet salient_from_json(const json& j) {
  SalientTokenSet s;
  s.block = j.at("block").get<std::size_t>();
  s.text_indices = j.at("text").get<std::vector<std::size_t>>();
  s.image_indices = j.at("image").get<std::vector<std::size_t>>();
  return s;
}

json to_json(const StepRecord& r) {
  json modes = json::array();
  for (BlockMode m : r.modes) modes.push_back(to_string(m));
  return {{"step", r.step},
          {"role", to_string(r.role)},
          {"cached", r.cached},
          {"modes", modes},
          {"salient_tokens", r.salient_tokens},
          {"hidden_checksum", hex64(r.hidden_checksum)},
          {"noise", to_json(r.noise)}};
}

StepRecord step_from_json(const json& j) {
  StepRecord r;
  r.step = j.at("step").get<std::size_t>();
  r.role = parse_step_role(j.at("role").get<std::string>());
  r.cached = j.at("cached").get<std::vector<std::size_t>>();
  for (const auto& m : j.at("modes")) {
    r.modes.push_back(parse_block_mode(m.get<std::string>()));
  }
  r.salient_tokens = j.at("salient_tokens").get<std::vector<std::uint64_t>>();
  r.hidden_checksum = parse_hex64(j.at("hidden_checksum").get<std::string>());
  r.noise = matrix_from_json(j.at("noise"));
  return r;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used, 16);
  if (used != s.size()) throw std::invalid_argument("bad hex value '" + s + "'");
  return v;
}

CostDims cost_dims(const ModelConfig& config) {
  return {config.tokens(), config.hidden_dim, config.ffn_dim, config.num_heads};
}

CostReport cost_report(const Trace& trace) {
  if (trace.steps.size() != trace.model.total_steps) {
    throw std::invalid_argument("cost_report: trace has " +
                                std::to_string(trace.steps.size()) +
                                " steps, expected " +
                                std::to_string(trace.model.total_steps));
  }
  std::vector<StepModes> steps;
  steps.reserve(trace.steps.size());
  for (const StepRecord& r : trace.steps) {
    if (r.modes.size() != trace.model.num_blocks) {
      throw std::invalid_argument("cost_report: incomplete step record");
    }
    steps.push_back({r.modes, r.salient_tokens});
  }
  return cost_from_modes(cost_dims(trace.model), steps, trace.run.residual);
}

json to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", m.values()}};
}

Matrix matrix_from_json(const json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("values").get<std::vector<double>>());
}

json to_json(const ModelConfig& c) {
  return {{"blocks", c.num_blocks},        {"dim", c.hidden_dim},
          {"ffn_dim", c.ffn_dim},          {"heads", c.num_heads},
          {"text_tokens", c.text_tokens},  {"image_tokens", c.image_tokens},
          {"steps", c.total_steps},        {"beta_start", c.beta_start},
          {"beta_end", c.beta_end}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.num_blocks = j.at("blocks").get<std::size_t>();
  c.hidden_dim = j.at("dim").get<std::size_t>();
  c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
  c.num_heads = j.at("heads").get<std::size_t>();
  c.text_tokens = j.at("text_tokens").get<std::size_t>();
  c.image_tokens = j.at("image_tokens").get<std::size_t>();
  c.total_steps = j.at("steps").get<std::size_t>();
  c.beta_start = j.at("beta_start").get<double>();
  c.beta_end = j.at("beta_end").get<double>();
  return c;
}

json to_json(const RunConfig& c) {
  const CorgiConfig& p = c.policy;
  json j = {{"policy", to_string(p.policy)},
            {"warmup", p.warmup ? json(*p.warmup) : json(nullptr)},
            {"interval", p.interval},
            {"gamma", p.gamma},
            {"delta", p.delta},
            {"top_c", p.top_c ? json(*p.top_c) : json(nullptr)},
            {"parity", to_string(p.parity)},
            {"seed", p.seed},
            {"residual", to_string(c.residual)},
            {"refresh_saliency", c.refresh_saliency},
            {"attn_write_back", c.attn_write_back},
            {"centered_cka", c.cka.centered}};
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  CorgiConfig& p = c.policy;
  p.policy = parse_policy_kind(j.at("policy").get<std::string>());
  if (!j.at("warmup").is_null()) p.warmup = j.at("warmup").get<std::size_t>();
  p.interval = j.at("interval").get<std::size_t>();
  p.gamma = j.at("gamma").get<std::size_t>();
  p.delta = j.at("delta").get<std::size_t>();
  if (!j.at("top_c").is_null()) p.top_c = j.at("top_c").get<std::size_t>();
  p.parity = parse_parity(j.at("parity").get<std::string>());
  p.seed = j.at("seed").get<std::uint64_t>();
  c.residual = parse_residual_strategy(j.at("residual").get<std::string>());
  c.refresh_saliency = j.at("refresh_saliency").get<bool>();
  c.attn_write_back = j.at("attn_write_back").get<bool>();
  c.cka.centered = j.at("centered_cka").get<bool>();
  return c;
}

json to_json(const CostReport& r) {
  return {{"flops_full", r.flops_full},
          {"flops_actual", r.flops_actual},
          {"speedup", r.speedup},
          {"blocks_total", r.blocks_total},
          {"blocks_computed", r.blocks_computed},
          {"block_speedup", r.block_speedup},
          {"step_flops", r.step_flops},
          {"step_blocks_computed", r.step_blocks_computed}};
}

CostReport cost_report_from_json(const json& j) {
  CostReport r;
  r.flops_full = j.at("flops_full").get<std::uint64_t>();
  r.flops_actual = j.at("flops_actual").get<std::uint64_t>();
  r.speedup = j.at("speedup").get<double>();
  r.blocks_total = j.at("blocks_total").get<std::uint64_t>();
  r.blocks_computed = j.at("blocks_computed").get<std::uint64_t>();
  r.block_speedup = j.at("block_speedup").get<double>();
  r.step_flops = j.at("step_flops").get<std::vector<std::uint64_t>>();
  r.step_blocks_computed =
      j.at("step_blocks_computed").get<std::vector<std::uint64_t>>();
  return r;
}

json to_json(const Trace& t) {
  json steps = json::array();
  for (const auto& s : t.steps) steps.push_back(to_json(s));
  json contributions = json::array();
  for (const auto& c : t.contributions) {
    contributions.push_back(
        {{"step", c.step}, {"scores", c.scores}, {"ranking", c.ranking}});
  }
  json saliency = json::array();
  for (const auto& s : t.saliency) {
    json sets = json::array();
    for (const auto& set : s.sets) sets.push_back(to_json(set));
    saliency.push_back({{"step", s.step}, {"sets", sets}});
  }
  return {{"schema", kTraceSchema},
          {"model", to_json(t.model)},
          {"model_seed", t.model_seed},
          {"input_seed", t.input_seed ? json(*t.input_seed) : json(nullptr)},
          {"run", to_json(t.run)},
          {"steps", steps},
          {"contributions", contributions},
          {"saliency", saliency},
          {"final_output", to_json(t.final_output)},
          {"cost", to_json(t.cost)}};
}

Trace trace_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != kTraceSchema) {
      throw std::invalid_argument("unsupported trace schema '" +
                                  j.at("schema").get<std::string>() + "'");
    }
    Trace t;
    t.model = model_config_from_json(j.at("model"));
    t.model_seed = j.at("model_seed").get<std::uint64_t>();
    if (!j.at("input_seed").is_null()) {
      t.input_seed = j.at("input_seed").get<std::uint64_t>();
    }
    t.run = run_config_from_json(j.at("run"));
    for (const auto& s : j.at("steps")) t.steps.push_back(step_from_json(s));
    for (const auto& c : j.at("contributions")) {
      t.contributions.push_back(
          {c.at("step").get<std::size_t>(),
           c.at("scores").get<ContributionVector>(),
           c.at("ranking").get<BlockRanking>()});
    }
    for (const auto& s : j.at("saliency")) {
      SaliencyRecord rec;
      rec.step = s.at("step").get<std::size_t>();
      for (const auto& set : s.at("sets")) {
        rec.sets.push_back(salient_from_json(set));
      }
      t.saliency.push_back(std::move(rec));
    }
    t.final_output = matrix_from_json(j.at("final_output"));
    t.cost = cost_report_from_json(j.at("cost"));
    return t;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed trace: ") + e.what());
  }
}

std::string serialize_trace(const Trace& t,
                            const std::optional<std::string>& timestamp) {
  json j = to_json(t);
  if (timestamp) j["generated_at"] = *timestamp;
  return j.dump(1) + "\n";
}

Trace parse_trace(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed trace: ") + e.what());
  }
  return trace_from_json(j);
}

}  // namespace corgi
