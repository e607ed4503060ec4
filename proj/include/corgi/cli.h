// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: `run`, `compare` and `ablate`. Exit codes are
// 0 (ok), 1 (runtime failure) and 2 (usage). Errors are reported on the
// error stream as a one-line JSON object.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "corgi/run_config.h"
#include "corgi/toy_dit.h"

namespace corgi {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RunSettings {
  ModelConfig model;
  RunConfig run;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> input_seed;

  std::uint64_t resolved_input_seed() const { return input_seed.value_or(seed); }
};

// Applies JSON keys (flag names, '-' or '_') over `base`. Unknown keys and
// wrongly typed values throw UsageError.
RunSettings apply_settings(const nlohmann::json& j, RunSettings base = {});

// Expands "0-19" or "0,3,5" (ranges allowed inside lists).
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

int cli_run(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace corgi
