// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corgi/cli.h"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "corgi/analysis.h"
#include "corgi/runtime.h"
#include "corgi/trace.h"

namespace corgi {

using nlohmann::json;

namespace {

std::string normalize_key(std::string key) {
  for (char& c : key) {
    if (c == '-') c = '_';
  }
  return key;
}

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, std::size_t> ||
                  std::is_same_v<T, std::uint64_t>) {
      const bool non_negative =
          v.is_number_unsigned() ||
          (v.is_number_integer() && v.get<std::int64_t>() >= 0);
      if (!non_negative) throw UsageError("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw UsageError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw UsageError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw UsageError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "' has the wrong type");
  }
}

template <typename Fn>
auto as_usage(Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool use_color() {
  const char* color = std::getenv("COLOR");
  if (color != nullptr && std::string(color) == "0") return false;
  return isatty(STDOUT_FILENO) != 0;
}

void write_output(const std::optional<std::string>& path, const json& doc,
                  std::ostream& out) {
  const std::string text = doc.dump(1) + "\n";
  if (!path) {
    out << text;
    return;
  }
  std::ofstream file(*path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + *path + "' for writing");
  file << text;
  if (!file) throw std::runtime_error("failed writing '" + *path + "'");
}

json load_config_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw UsageError("cannot read config file '" + path + "'");
  try {
    json j = json::parse(file);
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw UsageError("malformed config file '" + path + "': " + e.what());
  }
}

// Flags registered with CLI11 whose values, when given, are folded into a
// JSON object using the same keys as the config file.
class FlagSet {
 public:
  explicit FlagSet(CLI::App& app) : app_(app) {}

  template <typename T>
  void add(const std::string& flag, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_.add_option(flag, *value, help);
    const std::string key = normalize_key(flag.substr(2));
    bindings_.push_back({opt, [key, value](json& j) { j[key] = *value; }});
  }

  void add_flag(const std::string& flag, const std::string& help) {
    CLI::Option* opt = app_.add_flag(flag, help);
    const std::string key = normalize_key(flag.substr(2));
    bindings_.push_back({opt, [key](json& j) { j[key] = true; }});
  }

  json collect() const {
    json j = json::object();
    for (const auto& b : bindings_) {
      if (b.opt->count() > 0) b.write(j);
    }
    return j;
  }

 private:
  struct Binding {
    CLI::Option* opt;
    std::function<void(json&)> write;
  };
  CLI::App& app_;
  std::vector<Binding> bindings_;
};

void add_common_flags(FlagSet& flags) {
  flags.add<std::size_t>("--steps", "Denoising steps T");
  flags.add<std::size_t>("--blocks", "Number of DiT blocks B");
  flags.add<std::size_t>("--dim", "Hidden dimension d");
  flags.add<std::size_t>("--ffn-dim", "FFN hidden dimension");
  flags.add<std::size_t>("--heads", "Attention heads");
  flags.add<std::size_t>("--text-tokens", "Text tokens L_text");
  flags.add<std::size_t>("--image-tokens", "Image tokens L_img");
  flags.add<double>("--beta-start", "First beta of the linear schedule");
  flags.add<double>("--beta-end", "Last beta of the linear schedule");
  flags.add<std::string>("--policy",
                         "none|corgi|corgi_plus|per_step_naive|parity|random");
  flags.add<std::size_t>("--warmup", "Warm-up steps (default 20% of T)");
  flags.add<std::size_t>("--interval", "Interval length D");
  flags.add<std::size_t>("--gamma", "Blocks cached at the first intra-step");
  flags.add<std::size_t>("--delta", "Extra cached blocks per intra-step");
  flags.add<std::size_t>("--top-c", "Salient text tokens per block");
  flags.add<std::string>("--residual", "compute|reuse");
  flags.add_flag("--refresh-saliency", "Recompute salient tokens per boundary");
  flags.add_flag("--attn-write-back", "Write partial ATTN rows into the cache");
  flags.add_flag("--centered-cka", "Center features before CKA");
  flags.add<std::string>("--parity", "even|odd (parity policy)");
  flags.add<std::uint64_t>("--seed", "Model, input and policy seed");
  flags.add<std::uint64_t>("--input-seed", "Override the input seed");
}

struct Prepared {
  Model model;
  ModelInputs inputs;
};

Prepared prepare(const RunSettings& s) {
  Prepared p{as_usage([&] { return build_model(s.model, s.seed); }),
             make_inputs(s.model, s.resolved_input_seed())};
  as_usage([&] {
    s.run.policy.validate(s.model.total_steps, s.model.num_blocks);
    return 0;
  });
  return p;
}

Trace run_once(const RunSettings& s, const Prepared& p) {
  Trace trace =
      run_with_policy(p.model, p.inputs.latent, p.inputs.text_embed, s.run);
  trace.input_seed = s.resolved_input_seed();
  return trace;
}

int cmd_run(const RunSettings& s, const std::optional<std::string>& output,
            std::ostream& out) {
  const Prepared p = prepare(s);
  const Trace trace = run_once(s, p);
  const ReferenceTrajectory ref =
      run_reference(p.model, p.inputs.latent, p.inputs.text_embed);
  json doc = to_json(trace);
  doc["reference_check"] = {
      {"equivalent_to_reference", equivalent_to_reference(trace, ref)},
      {"divergence", to_json(divergence(trace, ref))}};
  doc["generated_at"] = utc_timestamp();
  write_output(output, doc, out);
  if (output) {
    out << "wrote " << *output << " (speedup " << trace.cost.speedup << ")\n";
  }
  return 0;
}

struct CompareRow {
  std::string label;
  std::uint64_t seed;
  RunSettings settings;
  Trace trace;
  DivergenceReport div;
  bool equivalent = false;
};

int cmd_compare(const RunSettings& base, const json& merged,
                const std::vector<std::uint64_t>& seeds,
                const std::optional<std::string>& output, std::ostream& out) {
  // Each entry is (label, overrides applied on top of the base settings).
  std::vector<std::pair<std::string, RunSettings>> variants;
  if (merged.contains("runs")) {
    if (!merged["runs"].is_array()) throw UsageError("'runs' must be an array");
    for (const auto& r : merged["runs"]) {
      if (!r.is_object()) throw UsageError("'runs' entries must be objects");
      json overrides = r;
      std::string label;
      if (overrides.contains("label")) {
        label = get_as<std::string>(overrides["label"], "label");
        overrides.erase("label");
      }
      RunSettings s = apply_settings(overrides, base);
      if (label.empty()) label = std::string(to_string(s.run.policy.policy));
      variants.emplace_back(label, s);
    }
  } else {
    std::vector<std::string> names = {"none", "corgi", "corgi_plus"};
    if (merged.contains("policies")) {
      const json& p = merged["policies"];
      if (p.is_string()) {
        names.clear();
        std::stringstream ss(p.get<std::string>());
        for (std::string item; std::getline(ss, item, ',');) {
          if (!item.empty()) names.push_back(item);
        }
      } else if (p.is_array()) {
        names = p.get<std::vector<std::string>>();
      } else {
        throw UsageError("'policies' must be a string or array");
      }
    }
    for (const auto& name : names) {
      RunSettings s = base;
      s.run.policy.policy = as_usage([&] { return parse_policy_kind(name); });
      variants.emplace_back(name, s);
    }
  }
  if (variants.empty()) throw UsageError("compare needs at least one run");

  // One task per seed; results are merged in (seed, variant) order.
  std::vector<std::future<std::vector<CompareRow>>> tasks;
  for (std::uint64_t seed : seeds) {
    std::vector<std::pair<std::string, RunSettings>> per_seed = variants;
    for (auto& [label, s] : per_seed) {
      s.seed = seed;
      s.run.policy.seed = seed;
      prepare(s);  // surface usage errors before launching
    }
    tasks.push_back(std::async(std::launch::async, [per_seed, seed] {
      std::vector<CompareRow> rows;
      std::optional<ReferenceTrajectory> ref;
      for (const auto& [label, s] : per_seed) {
        const Prepared p = prepare(s);
        if (!ref) {
          ref = run_reference(p.model, p.inputs.latent, p.inputs.text_embed);
        }
        CompareRow row{label, seed, s, run_once(s, p), {}, false};
        row.div = divergence(row.trace, *ref);
        row.equivalent = equivalent_to_reference(row.trace, *ref);
        rows.push_back(std::move(row));
      }
      return rows;
    }));
  }

  json runs = json::array();
  json summary = json::object();
  std::vector<CompareRow> all;
  for (auto& t : tasks) {
    for (auto& row : t.get()) all.push_back(std::move(row));
  }
  for (const auto& row : all) {
    runs.push_back({{"label", row.label},
                    {"seed", row.seed},
                    {"run", to_json(row.settings.run)},
                    {"final_mse", row.div.final_mse},
                    {"final_cosine", row.div.final_cosine},
                    {"step_mse", row.div.step_mse},
                    {"step_cosine", row.div.step_cosine},
                    {"equivalent_to_reference", row.equivalent},
                    {"cost", to_json(row.trace.cost)}});
  }
  for (const auto& [label, s] : variants) {
    double mse = 0.0, cosine = 0.0, speedup = 0.0, block_speedup = 0.0;
    std::size_t n = 0;
    for (const auto& row : all) {
      if (row.label != label) continue;
      mse += row.div.final_mse;
      cosine += row.div.final_cosine;
      speedup += row.trace.cost.speedup;
      block_speedup += row.trace.cost.block_speedup;
      ++n;
    }
    const double dn = static_cast<double>(n);
    summary[label] = {{"mean_final_mse", mse / dn},
                      {"mean_final_cosine", cosine / dn},
                      {"mean_speedup", speedup / dn},
                      {"mean_block_speedup", block_speedup / dn}};
  }

  json doc = {{"schema", "corgi-compare/1"},
              {"model", to_json(base.model)},
              {"seeds", seeds},
              {"runs", runs},
              {"summary", summary},
              {"generated_at", utc_timestamp()}};
  write_output(output, doc, out);

  if (output) {
    const bool color = use_color();
    out << std::left << std::setw(18) << "run" << std::setw(14) << "final_mse"
        << std::setw(12) << "cosine" << "speedup\n";
    for (const auto& [label, s] : variants) {
      const json& row = summary[label];
      const bool exact = row["mean_final_mse"].get<double>() == 0.0;
      out << (color && exact ? "\033[32m" : "") << std::setw(18) << label
          << std::setw(14) << row["mean_final_mse"].get<double>()
          << std::setw(12) << row["mean_final_cosine"].get<double>()
          << row["mean_speedup"].get<double>() << (color && exact ? "\033[0m" : "")
          << "\n";
    }
  }
  return 0;
}

int cmd_ablate(const RunSettings& s, const std::optional<std::size_t>& block,
               const std::optional<std::string>& output, std::ostream& out) {
  const Prepared p = prepare(s);
  const ReferenceTrajectory ref =
      run_reference(p.model, p.inputs.latent, p.inputs.text_embed);
  AnalysisReport report;
  if (block) {
    if (*block >= s.model.num_blocks) {
      throw UsageError("--block " + std::to_string(*block) + " out of range");
    }
    report.ablations.push_back(block_ablation(p.model, p.inputs.latent,
                                              p.inputs.text_embed, *block, ref));
  } else {
    for (std::size_t i = 0; i < s.model.num_blocks; ++i) {
      report.ablations.push_back(
          block_ablation(p.model, p.inputs.latent, p.inputs.text_embed, i, ref));
    }
  }
  if (s.model.total_steps >= 2) {
    report.adjacent_cka = adjacent_step_cka(ref, s.run.cka);
  }
  json doc = to_json(report);
  doc["schema"] = "corgi-analysis/1";
  doc["model"] = to_json(s.model);
  doc["seed"] = s.seed;
  doc["generated_at"] = utc_timestamp();
  write_output(output, doc, out);
  return 0;
}

void report_error(std::ostream& err, const char* kind, const std::string& msg) {
  err << json{{"error", kind}, {"message", msg}}.dump() << "\n";
}

}  // namespace

RunSettings apply_settings(const json& j, RunSettings base) {
  if (!j.is_object()) throw UsageError("settings must be a JSON object");
  RunSettings s = std::move(base);
  for (const auto& [raw_key, v] : j.items()) {
    const std::string key = normalize_key(raw_key);
    auto size = [&] { return get_as<std::size_t>(v, key); };
    if (key == "steps") {
      s.model.total_steps = size();
    } else if (key == "blocks") {
      s.model.num_blocks = size();
    } else if (key == "dim") {
      s.model.hidden_dim = size();
    } else if (key == "ffn_dim") {
      s.model.ffn_dim = size();
    } else if (key == "heads") {
      s.model.num_heads = size();
    } else if (key == "text_tokens") {
      s.model.text_tokens = size();
    } else if (key == "image_tokens") {
      s.model.image_tokens = size();
    } else if (key == "beta_start") {
      s.model.beta_start = get_as<double>(v, key);
    } else if (key == "beta_end") {
      s.model.beta_end = get_as<double>(v, key);
    } else if (key == "policy") {
      s.run.policy.policy = as_usage(
          [&] { return parse_policy_kind(get_as<std::string>(v, key)); });
    } else if (key == "warmup") {
      s.run.policy.warmup = size();
    } else if (key == "interval") {
      s.run.policy.interval = size();
    } else if (key == "gamma") {
      s.run.policy.gamma = size();
    } else if (key == "delta") {
      s.run.policy.delta = size();
    } else if (key == "top_c") {
      s.run.policy.top_c = size();
    } else if (key == "residual") {
      s.run.residual = as_usage(
          [&] { return parse_residual_strategy(get_as<std::string>(v, key)); });
    } else if (key == "refresh_saliency") {
      s.run.refresh_saliency = get_as<bool>(v, key);
    } else if (key == "attn_write_back") {
      s.run.attn_write_back = get_as<bool>(v, key);
    } else if (key == "centered_cka") {
      s.run.cka.centered = get_as<bool>(v, key);
    } else if (key == "parity") {
      s.run.policy.parity =
          as_usage([&] { return parse_parity(get_as<std::string>(v, key)); });
    } else if (key == "seed") {
      s.seed = get_as<std::uint64_t>(v, key);
      s.run.policy.seed = s.seed;
    } else if (key == "input_seed") {
      s.input_seed = get_as<std::uint64_t>(v, key);
    } else if (key == "runs" || key == "policies" || key == "seeds" ||
               key == "block") {
      // Subcommand-level keys, consumed by their subcommand.
    } else {
      throw UsageError("unknown config key '" + raw_key + "'");
    }
  }
  return s;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    try {
      const auto dash = item.find('-');
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(item));
      } else {
        const std::uint64_t lo = std::stoull(item.substr(0, dash));
        const std::uint64_t hi = std::stoull(item.substr(dash + 1));
        if (hi < lo) throw UsageError("");
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::exception&) {
      throw UsageError("bad seed list '" + text + "'");
    }
  }
  if (seeds.empty()) throw UsageError("empty seed list");
  return seeds;
}

int cli_run(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Block-wise interval caching lab for a toy diffusion transformer",
               "corgi"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  auto setup = [&](CLI::App* sub, FlagSet& flags) {
    add_common_flags(flags);
    sub->add_option("--config", config_path, "JSON config (flags override it)");
    sub->add_option("-o,--output", output, "Output file (default stdout)");
  };

  CLI::App* run = app.add_subcommand("run", "Run one config and write a trace");
  FlagSet run_flags(*run);
  setup(run, run_flags);

  CLI::App* compare = app.add_subcommand(
      "compare", "Run several policies against the reference");
  FlagSet compare_flags(*compare);
  setup(compare, compare_flags);
  compare_flags.add<std::string>("--policies", "Comma list of policies");
  compare_flags.add<std::string>("--seeds", "Seed list, e.g. 0-19 or 0,3,5");

  CLI::App* ablate = app.add_subcommand(
      "ablate", "Block-ablation maps and adjacent-step CKA");
  FlagSet ablate_flags(*ablate);
  setup(ablate, ablate_flags);
  ablate_flags.add<std::size_t>("--block", "Only ablate this block");

  std::vector<std::string> argv = args;
  std::reverse(argv.begin(), argv.end());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return 2;
  }

  try {
    CLI::App* active = run->parsed() ? run : compare->parsed() ? compare : ablate;
    FlagSet& flags = run->parsed()       ? run_flags
                     : compare->parsed() ? compare_flags
                                         : ablate_flags;
    json merged = config_path.empty() ? json::object()
                                      : load_config_file(config_path);
    merged.update(flags.collect());
    const RunSettings settings = apply_settings(merged);
    std::optional<std::string> out_path;
    if (!output.empty()) out_path = output;

    if (active == run) return cmd_run(settings, out_path, out);
    if (active == compare) {
      std::vector<std::uint64_t> seeds = {settings.seed};
      if (merged.contains("seeds")) {
        const json& s = merged["seeds"];
        seeds = s.is_array() ? s.get<std::vector<std::uint64_t>>()
                             : parse_seed_list(get_as<std::string>(s, "seeds"));
      }
      return cmd_compare(settings, merged, seeds, out_path, out);
    }
    std::optional<std::size_t> block;
    if (merged.contains("block")) {
      block = get_as<std::size_t>(merged["block"], "block");
    }
    return cmd_ablate(settings, block, out_path, out);
  } catch (const UsageError& e) {
    report_error(err, "usage", e.what());
    return 2;
  } catch (const std::exception& e) {
    report_error(err, "runtime", e.what());
    return 1;
  }
}

}  // namespace corgi
