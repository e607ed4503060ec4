// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corgi/analysis.h"

#include <stdexcept>
#include <string>

namespace corgi {

namespace {

DivergenceReport compare_series(const std::vector<const Matrix*>& a,
                                const std::vector<const Matrix*>& b,
                                const Matrix& final_a, const Matrix& final_b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("divergence: step counts differ (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  DivergenceReport r;
  r.bit_identical = final_a == final_b;
  for (std::size_t k = 0; k < a.size(); ++k) {
    r.step_mse.push_back(mean_squared_error(*a[k], *b[k]));
    r.step_cosine.push_back(cosine_similarity(a[k]->values(), b[k]->values()));
    r.bit_identical = r.bit_identical && *a[k] == *b[k];
  }
  r.final_mse = mean_squared_error(final_a, final_b);
  r.final_cosine = cosine_similarity(final_a.values(), final_b.values());
  return r;
}

}  // namespace

DivergenceReport divergence(const Trace& trace,
                            const ReferenceTrajectory& reference) {
  std::vector<const Matrix*> a, b;
  for (const auto& s : trace.steps) a.push_back(&s.noise);
  for (const auto& n : reference.noise) b.push_back(&n);
  return compare_series(a, b, trace.final_output, reference.final_output());
}

DivergenceReport divergence(const Trace& x, const Trace& y) {
  std::vector<const Matrix*> a, b;
  for (const auto& s : x.steps) a.push_back(&s.noise);
  for (const auto& s : y.steps) b.push_back(&s.noise);
  return compare_series(a, b, x.final_output, y.final_output);
}

bool equivalent_to_reference(const Trace& trace,
                             const ReferenceTrajectory& reference) {
  if (trace.steps.size() != reference.noise.size()) return false;
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    if (trace.steps[k].hidden_checksum != checksum(reference.last_hidden[k])) {
      return false;
    }
  }
  return divergence(trace, reference).bit_identical;
}

std::vector<double> token_cosine(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("token_cosine: shape mismatch");
  }
  std::vector<double> out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    out[r] = cosine_similarity(a.row(r), b.row(r));
  }
  return out;
}

AblationMap block_ablation(const Model& model, const Matrix& latent,
                           const Matrix& text_embed, std::size_t block,
                           const ReferenceTrajectory& reference) {
  const ModelConfig& c = model.config;
  if (block >= c.num_blocks) {
    throw std::out_of_range("block_ablation: block " + std::to_string(block) +
                            " out of range");
  }
  if (reference.noise.size() != c.total_steps) {
    throw std::invalid_argument("block_ablation: reference has wrong length");
  }
  AblationMap map;
  map.block = block;
  Matrix x = latent;
  for (std::size_t step = 0; step < c.total_steps; ++step) {
    Matrix h = embed_tokens(model, x, text_embed, step);
    for (std::size_t i = 0; i < c.num_blocks; ++i) {
      if (i == block) continue;
      h = block_forward(model.blocks[i], h, c.text_tokens).block_out;
    }
    const Matrix eps = predict_noise(model, h);
    auto row = token_cosine(eps, reference.noise[step]);
    double mean = 0.0;
    for (double v : row) mean += v;
    map.step_mean.push_back(mean / static_cast<double>(row.size()));
    map.cosine.push_back(std::move(row));
    x = denoise_step_mean(x, eps, timestep_for(step, c.total_steps),
                          model.schedule);
  }
  return map;
}

std::vector<double> adjacent_step_cka(const ReferenceTrajectory& reference,
                                      CkaOptions options) {
  if (reference.noise.size() < 2) {
    throw std::invalid_argument("adjacent_step_cka: need at least 2 steps");
  }
  std::vector<double> series;
  for (std::size_t t = 1; t < reference.noise.size(); ++t) {
    series.push_back(cka(reference.noise[t], reference.noise[t - 1], options));
  }
  return series;
}

AnalysisReport analyze(const Model& model, const Matrix& latent,
                       const Matrix& text_embed) {
  const ReferenceTrajectory reference = run_reference(model, latent, text_embed);
  AnalysisReport report;
  for (std::size_t i = 0; i < model.config.num_blocks; ++i) {
    report.ablations.push_back(
        block_ablation(model, latent, text_embed, i, reference));
  }
  if (model.config.total_steps >= 2) {
    report.adjacent_cka = adjacent_step_cka(reference);
  }
  return report;
}

nlohmann::json to_json(const DivergenceReport& r) {
  return {{"step_mse", r.step_mse},
          {"step_cosine", r.step_cosine},
          {"final_mse", r.final_mse},
          {"final_cosine", r.final_cosine},
          {"bit_identical", r.bit_identical}};
}

nlohmann::json to_json(const AnalysisReport& r) {
  nlohmann::json ablations = nlohmann::json::array();
  for (const auto& a : r.ablations) {
    ablations.push_back({{"block", a.block},
                         {"cosine", a.cosine},
                         {"step_mean", a.step_mean}});
  }
  return {{"ablations", ablations}, {"adjacent_cka", r.adjacent_cka}};
}

}  // namespace corgi
