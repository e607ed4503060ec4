// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Each criterion prints one PASS/FAIL line with its
// measured detail and wall time; the exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "corgi/analysis.h"
#include "corgi/contribution.h"
#include "corgi/runtime.h"
#include "corgi/saliency.h"
#include "corgi/trace.h"
#include "oracles.h"

namespace corgi {
namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> body;
};

// Collects the first few failure messages of a criterion.
class Checker {
 public:
  void expect(bool cond, const std::string& what) {
    if (cond) return;
    ++failures_;
    if (failures_ <= 3) notes_ << (failures_ > 1 ? "; " : "") << what;
  }
  Outcome done(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    std::ostringstream s;
    s << failures_ << " failure(s): " << notes_.str();
    return {false, s.str()};
  }

 private:
  int failures_ = 0;
  std::ostringstream notes_;
};

struct Fixture {
  Model model;
  ModelInputs inputs;
};

Fixture make_fixture(const ModelConfig& c, std::uint64_t seed) {
  return {build_model(c, seed), make_inputs(c, seed)};
}

Trace run(const Fixture& f, const RunConfig& rc) {
  return run_with_policy(f.model, f.inputs.latent, f.inputs.text_embed, rc);
}

std::size_t full_blocks(const StepRecord& r) {
  return static_cast<std::size_t>(
      std::count(r.modes.begin(), r.modes.end(), BlockMode::kFull));
}

// 1. Caching configurations that never cache reproduce the reference.
Outcome noop_equivalence() {
  Checker c;
  ModelConfig mc;  // B=8, d=32, T=12
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Fixture f = make_fixture(mc, seed);
    const ReferenceTrajectory ref =
        run_reference(f.model, f.inputs.latent, f.inputs.text_embed);
    RunConfig zero;
    zero.policy.gamma = 0;
    zero.policy.delta = 0;
    RunConfig every;
    every.policy.interval = 1;
    for (const RunConfig& rc : {zero, every}) {
      const Trace t = run(f, rc);
      c.expect(equivalent_to_reference(t, ref) &&
                   divergence(t, ref).final_mse == 0.0,
               "seed " + std::to_string(seed) + " diverged");
    }
  }
  return c.done("20 runs bit-identical");
}

// 2. Engine schedule versus brute-force enumeration.
Outcome schedule_oracle() {
  Checker c;
  std::mt19937_64 gen(2026);
  for (int trial = 0; trial < 50; ++trial) {
    ModelConfig mc;
    mc.num_blocks = 1 + gen() % 16;
    mc.total_steps = 1 + gen() % 40;
    mc.hidden_dim = 4;
    mc.ffn_dim = 4;
    mc.num_heads = 1;
    mc.text_tokens = 2;
    mc.image_tokens = 2;
    RunConfig rc;
    rc.policy.warmup = gen() % (mc.total_steps + 1);
    rc.policy.interval = 1 + gen() % 8;
    rc.policy.gamma = gen() % (mc.num_blocks + 1);
    rc.policy.delta = gen() % 4;
    const Trace t = run(make_fixture(mc, trial), rc);
    const auto expect = oracle::enumerate_computed_blocks(
        mc.total_steps, *rc.policy.warmup, rc.policy.interval, rc.policy.gamma,
        rc.policy.delta, mc.num_blocks);
    for (std::size_t k = 0; k < mc.total_steps; ++k) {
      c.expect(full_blocks(t.steps[k]) == expect[k] &&
                   t.cost.step_blocks_computed[k] == expect[k],
               "trial " + std::to_string(trial) + " step " + std::to_string(k));
    }
  }
  return c.done("50 tuples match");
}

// 3. Worked cost ratio.
Outcome worked_ratio() {
  Checker c;
  RunConfig rc;
  rc.policy.warmup = 2;
  rc.policy.interval = 5;
  rc.policy.gamma = 3;
  rc.policy.delta = 1;
  const Trace t = run(make_fixture(ModelConfig{}, 0), rc);
  c.expect(t.cost.blocks_computed == 60, "computed blocks != 60");
  c.expect(t.cost.blocks_total == 96, "total blocks != 96");
  c.expect(t.cost.blocks_computed * 8 == t.cost.blocks_total * 5,
           "ratio != 60/96");
  c.expect(t.cost.block_speedup == 1.6, "block speedup != 1.6");
  std::ostringstream s;
  s << t.cost.blocks_computed << "/" << t.cost.blocks_total << ", speedup "
    << t.cost.block_speedup;
  return c.done(s.str());
}

// 4. CKA properties.
Outcome cka_properties() {
  Checker c;
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<std::size_t> dim(1, 16);
  std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
  std::bernoulli_distribution flip(0.5);
  double worst_oracle = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = dim(gen), d = dim(gen);
    const Matrix x = oracle::random_matrix(gen, n, d);
    const Matrix y = oracle::random_matrix(gen, n, d);
    const double v = cka(x, y);
    const std::string tag = "pair " + std::to_string(trial);
    c.expect(v >= 0.0 && v <= 1.0, tag + " out of range");
    c.expect(std::abs(cka(x, x) - 1.0) <= 1e-12, tag + " cka(X,X) != 1");

    const double a = std::pow(10.0, log_scale(gen)) * (flip(gen) ? -1 : 1);
    const double b = std::pow(10.0, log_scale(gen)) * (flip(gen) ? -1 : 1);
    c.expect(std::abs(cka(scale(x, a), scale(y, b)) - v) <= 1e-9,
             tag + " scale");

    const Matrix q = oracle::random_orthogonal(gen, d);
    const Matrix r = oracle::random_orthogonal(gen, d);
    c.expect(std::abs(cka(oracle::naive_matmul(x, q),
                          oracle::naive_matmul(y, r)) - v) <= 1e-9,
             tag + " orthogonal");
    c.expect(std::abs(cka(y, x) - v) <= 1e-12, tag + " symmetry");
    const double gap = std::abs(oracle::cka_straight_line(x, y) - v);
    worst_oracle = std::max(worst_oracle, gap);
    c.expect(gap <= 1e-12, tag + " oracle");
  }
  std::ostringstream s;
  s << "200 pairs, max oracle gap " << worst_oracle;
  return c.done(s.str());
}

// 5. Exact 2-means and argmax membership.
Outcome exact_two_means() {
  Checker c;
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::size_t> len(2, 12);
  std::uniform_real_distribution<double> val(0.0, 1.0);
  std::uniform_int_distribution<int> coarse(0, 5);
  std::size_t salient_calls = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(len(gen));
    for (double& x : v) x = trial % 4 == 3 ? coarse(gen) / 5.0 : val(gen);
    const KMeansResult r = kmeans_1d_two(v);
    const double got = oracle::partition_sse(v, r.in_high);
    const double best = oracle::exhaustive_two_means_sse(v);
    c.expect(std::abs(got - best) <= 1e-12,
             "draw " + std::to_string(trial) + " not optimal");

    // Use the draw as one column of a map and check every selected column.
    const std::size_t cols = 1 + gen() % 6;
    Matrix a = oracle::random_matrix(gen, v.size(), cols, 0.0, 1.0);
    for (std::size_t row = 0; row < v.size(); ++row) a(row, 0) = v[row];
    const std::size_t top = 1 + gen() % cols;
    const SalientTokenSet s = identify_salient(a, top);
    ++salient_calls;
    for (std::size_t u : s.text_indices) {
      std::size_t arg = 0;
      for (std::size_t row = 1; row < a.rows(); ++row) {
        if (a(row, u) > a(arg, u)) arg = row;
      }
      c.expect(std::binary_search(s.image_indices.begin(),
                                  s.image_indices.end(), arg),
               "argmax missing in draw " + std::to_string(trial));
    }
  }

  // Salient sets chosen during actual corgi_plus runs.
  RunConfig rc;
  rc.policy.policy = PolicyKind::kCorgiPlus;
  rc.policy.top_c = 3;
  rc.refresh_saliency = true;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Fixture f = make_fixture(ModelConfig{}, seed);
    const ReferenceTrajectory ref =
        run_reference(f.model, f.inputs.latent, f.inputs.text_embed);
    const Trace t = run(f, rc);
    // The first saliency step matches the reference (all earlier steps are
    // computed in full), so its maps are available for the check.
    const SaliencyRecord& rec = t.saliency.front();
    for (std::size_t i = 0; i < rec.sets.size(); ++i) {
      const Matrix& a = ref.blocks[rec.step][i].cross_map;
      ++salient_calls;
      c.expect(identify_salient(a, 3, i) == rec.sets[i], "run set mismatch");
      for (std::size_t u : rec.sets[i].text_indices) {
        std::size_t arg = 0;
        for (std::size_t row = 1; row < a.rows(); ++row) {
          if (a(row, u) > a(arg, u)) arg = row;
        }
        c.expect(std::binary_search(rec.sets[i].image_indices.begin(),
                                    rec.sets[i].image_indices.end(), arg),
                 "argmax missing in run");
      }
    }
  }
  return c.done("100 draws optimal, " + std::to_string(salient_calls) +
                " salient sets hold the argmax");
}

// 6. Partial attention rows and masked merge.
Outcome partial_rows() {
  Checker c;
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 50; ++trial) {
    ModelConfig mc;
    mc.num_blocks = 1;
    mc.num_heads = 1 + gen() % 4;
    mc.hidden_dim = mc.num_heads * (1 + gen() % 8);
    mc.ffn_dim = 2 * mc.hidden_dim;
    mc.text_tokens = 1 + gen() % 8;
    mc.image_tokens = 1 + gen() % 12;
    mc.total_steps = 2;
    const Fixture f = make_fixture(mc, trial);
    const Block& block = f.model.blocks[0];
    const Matrix h =
        oracle::random_matrix(gen, mc.tokens(), mc.hidden_dim, -3.0, 3.0);

    SalientTokenSet s;
    for (std::size_t u = 0; u < mc.text_tokens; ++u) {
      if (gen() % 2) s.text_indices.push_back(u);
    }
    for (std::size_t v = 0; v < mc.image_tokens; ++v) {
      if (gen() % 3 == 0) s.image_indices.push_back(v);
    }
    if (s.empty()) s.text_indices.push_back(0);
    const auto rows = mask_rows(s, mc.text_tokens);
    const TokenMask mask = build_mask(s, mc.text_tokens, mc.image_tokens);

    const Matrix full = attention(block, h).out;
    const Matrix part = partial_attention(block, h, rows);
    const std::string tag = "draw " + std::to_string(trial);
    c.expect(part.rows() == rows.size(), tag + " row count");
    for (std::size_t k = 0; k < rows.size() && k < part.rows(); ++k) {
      c.expect(std::equal(part.row(k).begin(), part.row(k).end(),
                          full.row(rows[k]).begin()),
               tag + " row " + std::to_string(rows[k]));
    }

    const Matrix cached =
        oracle::random_matrix(gen, mc.tokens(), mc.hidden_dim);
    const Matrix merged = masked_merge(part, cached, mask);
    for (std::size_t u = 0; u < mc.tokens(); ++u) {
      const auto want = mask[u] ? full.row(u) : cached.row(u);
      c.expect(std::equal(merged.row(u).begin(), merged.row(u).end(),
                          want.begin()),
               tag + " merge row " + std::to_string(u));
    }
  }
  return c.done("50 draws bit-equal");
}

// 7. Reusing the stale block output diverges at least as much as recomputing
// the residual.
Outcome residual_direction() {
  int wins = 0;
  std::ostringstream detail;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Fixture f = make_fixture(ModelConfig{}, seed);
    const ReferenceTrajectory ref =
        run_reference(f.model, f.inputs.latent, f.inputs.text_embed);
    RunConfig compute;
    compute.policy.policy = PolicyKind::kParity;
    RunConfig reuse = compute;
    reuse.residual = ResidualStrategy::kReuse;
    const double mse_compute = divergence(run(f, compute), ref).final_mse;
    const double mse_reuse = divergence(run(f, reuse), ref).final_mse;
    if (mse_reuse >= mse_compute) ++wins;
  }
  detail << "reuse >= compute on " << wins << "/10 seeds";
  return {wins >= 8, detail.str()};
}

// 8. Cost is monotone in gamma; the none policy costs exactly the full model.
Outcome monotone_cost() {
  Checker c;
  const Fixture f = make_fixture(ModelConfig{}, 8);
  for (PolicyKind kind : {PolicyKind::kCorgi, PolicyKind::kCorgiPlus}) {
    for (ResidualStrategy res :
         {ResidualStrategy::kCompute, ResidualStrategy::kReuse}) {
      if (kind == PolicyKind::kCorgiPlus && res == ResidualStrategy::kReuse) {
        continue;
      }
      std::uint64_t previous = ~std::uint64_t{0};
      for (std::size_t gamma = 0; gamma <= 8; ++gamma) {
        RunConfig rc;
        rc.policy.policy = kind;
        rc.policy.warmup = 2;
        rc.policy.interval = 5;
        rc.policy.delta = 1;
        rc.policy.gamma = gamma;
        rc.residual = res;
        const Trace t = run(f, rc);
        c.expect(t.cost.flops_actual <= previous,
                 std::string(to_string(kind)) + " gamma " +
                     std::to_string(gamma) + " increased cost");
        c.expect(t.cost.flops_actual <= t.cost.flops_full, "actual > full");
        previous = t.cost.flops_actual;
      }
    }
  }
  RunConfig none;
  none.policy.policy = PolicyKind::kNone;
  const Trace t = run(f, none);
  c.expect(t.cost.speedup == 1.0, "none speedup != 1");
  c.expect(t.cost.flops_actual == t.cost.flops_full, "none actual != full");
  return c.done("non-increasing over gamma 0..8, none speedup 1");
}

// 9. Determinism and serialization round trip.
Outcome determinism() {
  Checker c;
  for (PolicyKind kind :
       {PolicyKind::kNone, PolicyKind::kCorgi, PolicyKind::kCorgiPlus,
        PolicyKind::kPerStepNaive, PolicyKind::kParity, PolicyKind::kRandom}) {
    RunConfig rc;
    rc.policy.policy = kind;
    rc.policy.seed = 3;
    const std::string name(to_string(kind));
    const std::string a = serialize_trace(run(make_fixture(ModelConfig{}, 3), rc));
    const std::string b = serialize_trace(run(make_fixture(ModelConfig{}, 3), rc));
    c.expect(a == b, name + " not byte-identical");
    const Trace parsed = parse_trace(a);
    c.expect(serialize_trace(parsed) == a, name + " serialize(parse) differs");
    c.expect(parse_trace(serialize_trace(parsed)) == parsed,
             name + " parse(serialize) differs");
    c.expect(parse_trace(serialize_trace(parsed, "2026-01-01T00:00:00Z")) ==
                 parsed,
             name + " timestamp leaked into the trace");
  }
  return c.done("6 policies byte-identical and round-trip");
}

// 10. Analysis procedures on a small model.
Outcome analysis_shapes() {
  Checker c;
  ModelConfig mc;
  mc.num_blocks = 4;
  mc.total_steps = 8;
  const Fixture f = make_fixture(mc, 10);
  const ReferenceTrajectory ref =
      run_reference(f.model, f.inputs.latent, f.inputs.text_embed);
  for (std::size_t i = 0; i < 4; ++i) {
    const AblationMap m =
        block_ablation(f.model, f.inputs.latent, f.inputs.text_embed, i, ref);
    c.expect(m.cosine.size() == 8 && m.step_mean.size() == 8, "map steps");
    for (const auto& row : m.cosine) {
      c.expect(row.size() == mc.image_tokens, "map width");
      for (double v : row) c.expect(v >= -1.0 && v <= 1.0, "cosine range");
    }
  }
  const auto series = adjacent_step_cka(ref);
  c.expect(series.size() == 7, "cka series length");
  for (double v : series) c.expect(v >= 0.0 && v <= 1.0, "cka range");
  for (const Matrix& n : ref.noise) {
    for (double v : token_cosine(n, n)) {
      c.expect(std::abs(v - 1.0) <= 1e-12, "self cosine != 1");
    }
  }
  const AnalysisReport report =
      analyze(f.model, f.inputs.latent, f.inputs.text_embed);
  c.expect(report.ablations.size() == 4, "report ablations");
  c.expect(report.adjacent_cka == series, "report cka series");
  return c.done("4 maps of 8x16, 7 CKA values in [0,1]");
}

}  // namespace
}  // namespace corgi

int main() {
  using corgi::Criterion;
  const std::vector<Criterion> criteria = {
      {1, "no-op equivalence", 5.0, corgi::noop_equivalence},
      {2, "schedule oracle", 1.0, corgi::schedule_oracle},
      {3, "worked cost ratio", 1.0, corgi::worked_ratio},
      {4, "CKA properties", 2.0, corgi::cka_properties},
      {5, "exact 2-means", 5.0, corgi::exact_two_means},
      {6, "partial-attention rows", 3.0, corgi::partial_rows},
      {7, "residual-strategy direction", 10.0, corgi::residual_direction},
      {8, "monotone cost", 1.0, corgi::monotone_cost},
      {9, "determinism and round trip", 2.0, corgi::determinism},
      {10, "analysis procedures", 2.0, corgi::analysis_shapes},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    corgi::Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    if (o.ok && secs > c.budget_seconds) {
      o.ok = false;
      o.detail += " (over the time budget)";
    }
    if (!o.ok) ++failed;
    std::printf("%s [%2d] %-28s %6.3fs / %4.1fs  %s\n", o.ok ? "PASS" : "FAIL",
                c.id, c.name, secs, c.budget_seconds, o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
