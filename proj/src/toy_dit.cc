// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corgi/toy_dit.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace corgi {

namespace {

constexpr double kNormEps = 1e-6;

// Stream ids for derived generators. Blocks use kBlockStreamBase + index.
constexpr std::uint64_t kGlobalStream = 0;
constexpr std::uint64_t kBlockStreamBase = 1000;
constexpr std::uint64_t kLatentStream = 1;
constexpr std::uint64_t kTextStream = 2;

Matrix scaled_normal(SeededRng& rng, std::size_t rows, std::size_t cols,
                     double s) {
  return scale(rng_standard_normal(rng, rows, cols), s);
}

std::vector<double> normal_vector(SeededRng& rng, std::size_t n, double mean,
                                  double stddev) {
  std::vector<double> v = rng_standard_normal(rng, 1, n).values();
  for (double& x : v) x = mean + stddev * x;
  return v;
}

Matrix column_slice(const Matrix& m, std::size_t begin, std::size_t width) {
  Matrix out(m.rows(), width);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::copy_n(m.row(r).begin() + begin, width, out.row(r).begin());
  }
  return out;
}

double gelu(double x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x)));
}

// Multi-head attention for pre-normalized queries against all keys/values.
AttentionRows attend(const Block& block, const Matrix& normed_queries,
                     const Matrix& normed_all) {
  const std::size_t d = block.dim();
  const std::size_t heads = block.num_heads;
  const std::size_t dh = d / heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  const Matrix q = matmul(normed_queries, block.wq);
  const Matrix k = matmul(normed_all, block.wk);
  const Matrix v = matmul(normed_all, block.wv);

  Matrix context(q.rows(), d);
  Matrix probs(q.rows(), normed_all.rows());
  for (std::size_t h = 0; h < heads; ++h) {
    const Matrix qh = column_slice(q, h * dh, dh);
    const Matrix kh = column_slice(k, h * dh, dh);
    const Matrix vh = column_slice(v, h * dh, dh);
    const Matrix p = softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt_dh));
    const Matrix ctx = matmul(p, vh);
    for (std::size_t r = 0; r < q.rows(); ++r) {
      std::copy_n(ctx.row(r).begin(), dh, context.row(r).begin() + h * dh);
    }
    probs = add(probs, p);
  }
  probs = scale(probs, 1.0 / static_cast<double>(heads));
  return {matmul(context, block.wo), std::move(probs)};
}

void check_hidden(const Block& block, const Matrix& h) {
  if (h.cols() != block.dim() || h.rows() == 0) {
    throw std::invalid_argument("hidden state shape " +
                                std::to_string(h.rows()) + "x" +
                                std::to_string(h.cols()) +
                                " does not match block dim " +
                                std::to_string(block.dim()));
  }
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid model config: " + what);
  };
  if (num_blocks < 1) fail("num_blocks must be >= 1");
  if (hidden_dim < 1) fail("hidden_dim must be >= 1");
  if (ffn_dim < 1) fail("ffn_dim must be >= 1");
  if (num_heads < 1) fail("num_heads must be >= 1");
  if (hidden_dim % num_heads != 0) {
    fail("hidden_dim must be divisible by num_heads");
  }
  if (text_tokens < 1) fail("text_tokens must be >= 1");
  if (image_tokens < 1) fail("image_tokens must be >= 1");
  if (total_steps < 1) fail("total_steps must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    fail("betas must satisfy 0 < beta_start <= beta_end < 1");
  }
}

NoiseSchedule build_schedule(std::size_t steps, double beta_start,
                             double beta_end) {
  if (steps == 0) throw std::invalid_argument("build_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw std::invalid_argument(
        "build_schedule: need 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.betas.resize(steps);
  s.alphas.resize(steps);
  s.alpha_bars.resize(steps);
  double running = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac =
        steps == 1 ? 0.0
                   : static_cast<double>(i) / static_cast<double>(steps - 1);
    s.betas[i] = beta_start + (beta_end - beta_start) * frac;
    s.alphas[i] = 1.0 - s.betas[i];
    running *= s.alphas[i];
    s.alpha_bars[i] = running;
  }
  return s;
}

Model build_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t d = config.hidden_dim;
  const std::size_t dff = config.ffn_dim;
  const double w = 1.0 / std::sqrt(static_cast<double>(d));

  Model model;
  model.config = config;
  model.seed = seed;
  model.schedule =
      build_schedule(config.total_steps, config.beta_start, config.beta_end);

  model.blocks.reserve(config.num_blocks);
  for (std::size_t i = 0; i < config.num_blocks; ++i) {
    SeededRng rng = SeededRng::derive(seed, kBlockStreamBase + i);
    Block b;
    b.num_heads = config.num_heads;
    b.wq = scaled_normal(rng, d, d, w);
    b.wk = scaled_normal(rng, d, d, w);
    b.wv = scaled_normal(rng, d, d, w);
    b.wo = scaled_normal(rng, d, d, w);
    b.w1 = scaled_normal(rng, d, dff, w);
    b.w2 = scaled_normal(rng, dff, d, w);
    b.attn_norm_gain = normal_vector(rng, d, 1.0, 0.1);
    b.attn_norm_bias = normal_vector(rng, d, 0.0, 0.1);
    b.ffn_norm_gain = normal_vector(rng, d, 1.0, 0.1);
    b.ffn_norm_bias = normal_vector(rng, d, 0.0, 0.1);
    model.blocks.push_back(std::move(b));
  }

  SeededRng rng = SeededRng::derive(seed, kGlobalStream);
  model.patch_embed = scaled_normal(rng, d, d, w);
  model.noise_head = scaled_normal(rng, d, d, w);
  model.step_bias = rng_standard_normal(rng, config.total_steps, d);
  return model;
}

ModelInputs make_inputs(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  SeededRng latent_rng = SeededRng::derive(seed, kLatentStream);
  SeededRng text_rng = SeededRng::derive(seed, kTextStream);
  return {rng_standard_normal(latent_rng, config.image_tokens,
                              config.hidden_dim),
          rng_standard_normal(text_rng, config.text_tokens, config.hidden_dim)};
}

Matrix layer_norm(const Matrix& h, std::span<const double> gain,
                  std::span<const double> bias) {
  if (gain.size() != h.cols() || bias.size() != h.cols()) {
    throw std::invalid_argument("layer_norm: parameter length mismatch");
  }
  Matrix out(h.rows(), h.cols());
  const double n = static_cast<double>(h.cols());
  for (std::size_t r = 0; r < h.rows(); ++r) {
    auto in = h.row(r);
    double mean = 0.0;
    for (double x : in) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : in) var += (x - mean) * (x - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = (in[c] - mean) * inv * gain[c] + bias[c];
    }
  }
  return out;
}

AttentionRows attention(const Block& block, const Matrix& h) {
  check_hidden(block, h);
  const Matrix normed = layer_norm(h, block.attn_norm_gain, block.attn_norm_bias);
  return attend(block, normed, normed);
}

AttentionRows attention_rows(const Block& block, const Matrix& h,
                             std::span<const std::size_t> query_rows) {
  check_hidden(block, h);
  if (query_rows.empty()) return {Matrix(0, block.dim()), Matrix(0, h.rows())};
  const Matrix normed = layer_norm(h, block.attn_norm_gain, block.attn_norm_bias);
  return attend(block, select_rows(normed, query_rows), normed);
}

Matrix feed_forward(const Block& block, const Matrix& u) {
  check_hidden(block, u);
  Matrix hidden =
      matmul(layer_norm(u, block.ffn_norm_gain, block.ffn_norm_bias), block.w1);
  for (double& x : hidden.mutable_values()) x = gelu(x);
  return matmul(hidden, block.w2);
}

BlockOutputs block_forward(const Block& block, const Matrix& h,
                           std::size_t text_tokens) {
  if (text_tokens > h.rows()) {
    throw std::invalid_argument("block_forward: more text tokens than rows");
  }
  AttentionRows attn = attention(block, h);
  BlockOutputs out;
  const Matrix ffn_in = add(h, attn.out);
  out.ffn_out = feed_forward(block, ffn_in);
  out.block_out = add(ffn_in, out.ffn_out);
  out.attn_out = std::move(attn.out);
  out.cross_map = extract_cross_attention(attn.probs, text_tokens,
                                          h.rows() - text_tokens);
  out.joint_attention = std::move(attn.probs);
  return out;
}

Matrix extract_cross_attention(const Matrix& joint_attention,
                               std::size_t text_tokens,
                               std::size_t image_tokens) {
  const std::size_t n = text_tokens + image_tokens;
  if (joint_attention.rows() != n || joint_attention.cols() != n) {
    throw std::invalid_argument(
        "extract_cross_attention: joint map is not (L_text + L_img) square");
  }
  Matrix a(image_tokens, text_tokens);
  for (std::size_t v = 0; v < image_tokens; ++v) {
    for (std::size_t u = 0; u < text_tokens; ++u) {
      a(v, u) = joint_attention(text_tokens + v, u);
    }
  }
  return a;
}

Matrix denoise_step_mean(const Matrix& x_t, const Matrix& eps, std::size_t t,
                         const NoiseSchedule& schedule) {
  if (t < 1 || t > schedule.steps()) {
    throw std::out_of_range("denoise_step_mean: timestep " + std::to_string(t) +
                            " outside [1, " + std::to_string(schedule.steps()) +
                            "]");
  }
  if (x_t.rows() != eps.rows() || x_t.cols() != eps.cols()) {
    throw std::invalid_argument("denoise_step_mean: shape mismatch");
  }
  const double alpha = schedule.alphas[t - 1];
  const double alpha_bar = schedule.alpha_bars[t - 1];
  const double coef = (1.0 - alpha) / std::sqrt(1.0 - alpha_bar);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
  Matrix out(x_t.rows(), x_t.cols());
  auto& o = out.mutable_values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = inv_sqrt_alpha * (x_t.values()[i] - coef * eps.values()[i]);
  }
  return out;
}

Matrix embed_tokens(const Model& model, const Matrix& latent,
                    const Matrix& text_embed, std::size_t step) {
  const ModelConfig& c = model.config;
  if (latent.rows() != c.image_tokens || latent.cols() != c.hidden_dim) {
    throw std::invalid_argument("latent shape does not match config");
  }
  if (text_embed.rows() != c.text_tokens || text_embed.cols() != c.hidden_dim) {
    throw std::invalid_argument("text embedding shape does not match config");
  }
  if (step >= c.total_steps) throw std::out_of_range("embed_tokens: step");
  Matrix h = vstack(text_embed, matmul(latent, model.patch_embed));
  auto bias = model.step_bias.row(step);
  for (std::size_t r = 0; r < h.rows(); ++r) {
    auto row = h.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
  }
  return h;
}

Matrix predict_noise(const Model& model, const Matrix& last_hidden) {
  const std::size_t lt = model.config.text_tokens;
  return matmul(slice_rows(last_hidden, lt, last_hidden.rows()),
                model.noise_head);
}

ReferenceTrajectory run_reference(const Model& model, const Matrix& latent,
                                  const Matrix& text_embed) {
  const ModelConfig& c = model.config;
  ReferenceTrajectory traj;
  traj.latents.push_back(latent);
  for (std::size_t step = 0; step < c.total_steps; ++step) {
    Matrix h = embed_tokens(model, traj.latents.back(), text_embed, step);
    std::vector<Matrix> inputs;
    std::vector<BlockOutputs> outs;
    for (const Block& block : model.blocks) {
      inputs.push_back(h);
      outs.push_back(block_forward(block, h, c.text_tokens));
      h = outs.back().block_out;
    }
    Matrix eps = predict_noise(model, h);
    traj.latents.push_back(denoise_step_mean(
        traj.latents.back(), eps, timestep_for(step, c.total_steps),
        model.schedule));
    traj.noise.push_back(std::move(eps));
    traj.last_hidden.push_back(std::move(h));
    traj.block_inputs.push_back(std::move(inputs));
    traj.blocks.push_back(std::move(outs));
  }
  return traj;
}

}  // namespace corgi
