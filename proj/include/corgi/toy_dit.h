// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0
//
// A miniature multi-modal diffusion transformer. Text and image tokens are
// concatenated (text first) and pass through B blocks of joint
// self-attention and FFN, each written in the additive form
//
//   out = h + ATTN(h) + FFN(h + ATTN(h))
//
// with the layer norms living inside ATTN and FFN. The image slice of the
// last block output, projected by a seeded head, is the predicted noise
// used by a deterministic DDPM reverse step.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "corgi/numerics.h"

namespace corgi {

struct ModelConfig {
  std::size_t num_blocks = 8;
  std::size_t hidden_dim = 32;
  std::size_t ffn_dim = 64;
  std::size_t num_heads = 4;
  std::size_t text_tokens = 8;
  std::size_t image_tokens = 16;
  std::size_t total_steps = 12;
  double beta_start = 0.01;
  double beta_end = 0.2;

  std::size_t tokens() const { return text_tokens + image_tokens; }
  std::size_t head_dim() const { return hidden_dim / num_heads; }

  // Throws std::invalid_argument naming the first violated invariant.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct NoiseSchedule {
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;

  std::size_t steps() const { return betas.size(); }
};

// Linear β from beta_start to beta_end over T steps (β_1 = start, β_T = end).
NoiseSchedule build_schedule(std::size_t steps, double beta_start,
                             double beta_end);

struct Block {
  Matrix wq, wk, wv, wo;  // d x d
  Matrix w1;              // d x d_ff
  Matrix w2;              // d_ff x d
  std::vector<double> attn_norm_gain, attn_norm_bias;
  std::vector<double> ffn_norm_gain, ffn_norm_bias;
  std::size_t num_heads = 1;

  std::size_t dim() const { return wq.rows(); }
};

struct BlockOutputs {
  Matrix attn_out;
  Matrix ffn_out;
  Matrix block_out;
  Matrix joint_attention;  // L x L, head averaged
  Matrix cross_map;        // L_img x L_text
};

struct Model {
  ModelConfig config;
  std::uint64_t seed = 0;
  NoiseSchedule schedule;
  std::vector<Block> blocks;
  Matrix patch_embed;  // d x d, applied to latent image tokens
  Matrix noise_head;   // d x d, applied to the final image slice
  Matrix step_bias;    // T x d, row k added to every token at step k
};

Model build_model(const ModelConfig& config, std::uint64_t seed);

struct ModelInputs {
  Matrix latent;      // x_T, L_img x d
  Matrix text_embed;  // L_text x d
};

ModelInputs make_inputs(const ModelConfig& config, std::uint64_t seed);

Matrix layer_norm(const Matrix& h, std::span<const double> gain,
                  std::span<const double> bias);

struct AttentionRows {
  Matrix out;    // |rows| x d, after the output projection
  Matrix probs;  // |rows| x L, head averaged
};

// ATTN(h) for every row of h.
AttentionRows attention(const Block& block, const Matrix& h);
// ATTN(h) restricted to the given query rows. Keys and values come from all
// rows of h, so each returned row equals the matching row of attention().
AttentionRows attention_rows(const Block& block, const Matrix& h,
                             std::span<const std::size_t> query_rows);

Matrix feed_forward(const Block& block, const Matrix& u);

BlockOutputs block_forward(const Block& block, const Matrix& h,
                           std::size_t text_tokens);

Matrix extract_cross_attention(const Matrix& joint_attention,
                               std::size_t text_tokens,
                               std::size_t image_tokens);

// t is the 1-based diffusion timestep; the β_t variance term is dropped.
Matrix denoise_step_mean(const Matrix& x_t, const Matrix& eps, std::size_t t,
                         const NoiseSchedule& schedule);

// Execution step k (0-based) denoises timestep T - k.
inline std::size_t timestep_for(std::size_t step, std::size_t total_steps) {
  return total_steps - step;
}

// Concatenated tokens for step k with the step bias applied.
Matrix embed_tokens(const Model& model, const Matrix& latent,
                    const Matrix& text_embed, std::size_t step);
Matrix predict_noise(const Model& model, const Matrix& last_hidden);

struct ReferenceTrajectory {
  std::vector<Matrix> latents;  // T + 1 entries, x_T first
  std::vector<Matrix> noise;    // per step
  std::vector<Matrix> last_hidden;
  std::vector<std::vector<Matrix>> block_inputs;  // [step][block]
  std::vector<std::vector<BlockOutputs>> blocks;  // [step][block]

  const Matrix& final_output() const { return latents.back(); }
};

// Full computation of every block at every step.
ReferenceTrajectory run_reference(const Model& model, const Matrix& latent,
                                  const Matrix& text_embed);

}  // namespace corgi
