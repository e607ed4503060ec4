// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "corgi/analysis.h"
#include "corgi/cli.h"
#include "corgi/contribution.h"
#include "corgi/cost.h"
#include "corgi/policy.h"
#include "corgi/runtime.h"
#include "corgi/saliency.h"
#include "corgi/trace.h"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

corgi::Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return corgi::Matrix(rows, cols,
                       std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const corgi::Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

corgi::FeatureSnapshot to_snapshot(const std::vector<Array>& arrays) {
  corgi::FeatureSnapshot snap;
  for (const auto& a : arrays) snap.push_back(to_matrix(a));
  return snap;
}

struct Prepared {
  corgi::RunSettings settings;
  corgi::Model model;
  corgi::ModelInputs inputs;
};

Prepared prepare(const std::string& settings_json) {
  Prepared p;
  p.settings = corgi::apply_settings(nlohmann::json::parse(settings_json));
  p.model = corgi::build_model(p.settings.model, p.settings.seed);
  p.inputs = corgi::make_inputs(p.settings.model,
                                p.settings.resolved_input_seed());
  return p;
}

std::string run_json(const std::string& settings_json) {
  const Prepared p = prepare(settings_json);
  corgi::Trace trace = corgi::run_with_policy(
      p.model, p.inputs.latent, p.inputs.text_embed, p.settings.run);
  trace.input_seed = p.settings.resolved_input_seed();
  const corgi::ReferenceTrajectory ref =
      corgi::run_reference(p.model, p.inputs.latent, p.inputs.text_embed);
  nlohmann::json doc = corgi::to_json(trace);
  doc["reference_check"] = {
      {"equivalent_to_reference", corgi::equivalent_to_reference(trace, ref)},
      {"divergence", corgi::to_json(corgi::divergence(trace, ref))}};
  return doc.dump();
}

std::string analyze_json(const std::string& settings_json) {
  const Prepared p = prepare(settings_json);
  return corgi::to_json(corgi::analyze(p.model, p.inputs.latent,
                                       p.inputs.text_embed))
      .dump();
}

std::tuple<int, std::string, std::string> cli(
    const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = corgi::cli_run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

PYBIND11_MODULE(_corgi, m) {
  m.doc() = "Native core of corgi_lab";

  py::register_exception<corgi::UsageError>(m, "UsageError",
                                            PyExc_ValueError);

  m.def(
      "cka",
      [](const Array& x, const Array& y, bool centered) {
        return corgi::cka(to_matrix(x), to_matrix(y), {centered});
      },
      py::arg("x"), py::arg("y"), py::arg("centered") = false);

  m.def(
      "contribution_scores",
      [](const std::vector<Array>& previous, const std::vector<Array>& current,
         bool centered) {
        return corgi::contribution_scores(to_snapshot(previous),
                                          to_snapshot(current), {centered});
      },
      py::arg("previous"), py::arg("current"), py::arg("centered") = false);

  m.def("rank_ascending", &corgi::rank_ascending, py::arg("scores"));

  m.def(
      "kmeans_1d_two",
      [](const std::vector<double>& values) {
        const corgi::KMeansResult r = corgi::kmeans_1d_two(values);
        py::dict d;
        d["high_indices"] = r.high_indices;
        d["split"] = r.split;
        d["low_centroid"] = r.low_centroid;
        d["high_centroid"] = r.high_centroid;
        d["sse"] = r.sse;
        return d;
      },
      py::arg("values"));

  m.def(
      "identify_salient",
      [](const Array& cross_map, std::size_t c) {
        const corgi::SalientTokenSet s =
            corgi::identify_salient(to_matrix(cross_map), c);
        py::dict d;
        d["text_indices"] = s.text_indices;
        d["image_indices"] = s.image_indices;
        return d;
      },
      py::arg("cross_map"), py::arg("c"));

  m.def(
      "plan_steps",
      [](std::size_t total_steps, std::size_t warmup, std::size_t interval) {
        std::vector<std::string> out;
        for (const auto& r : corgi::plan_steps(total_steps, warmup, interval)) {
          out.push_back(corgi::to_string(r));
        }
        return out;
      },
      py::arg("total_steps"), py::arg("warmup"), py::arg("interval"));

  m.def("cached_count", &corgi::cached_count, py::arg("j"), py::arg("gamma"),
        py::arg("delta"), py::arg("num_blocks"));

  m.def(
      "flops_block",
      [](std::uint64_t tokens, std::uint64_t dim, std::uint64_t ffn_dim,
         const std::string& mode, std::uint64_t salient,
         const std::string& residual) {
        return corgi::flops_block({tokens, dim, ffn_dim, 1},
                                  corgi::parse_block_mode(mode), salient,
                                  corgi::parse_residual_strategy(residual));
      },
      py::arg("tokens"), py::arg("dim"), py::arg("ffn_dim"),
      py::arg("mode") = "full", py::arg("salient_tokens") = 0,
      py::arg("residual") = "compute");

  m.def(
      "masked_merge",
      [](const Array& fresh, const Array& cached,
         const std::vector<std::uint8_t>& mask) {
        return to_array(
            corgi::masked_merge(to_matrix(fresh), to_matrix(cached), mask));
      },
      py::arg("fresh"), py::arg("cached"), py::arg("mask"));

  m.def("_run_json", &run_json, py::arg("settings_json"),
        py::call_guard<py::gil_scoped_release>());
  m.def("_analyze_json", &analyze_json, py::arg("settings_json"),
        py::call_guard<py::gil_scoped_release>());
  m.def("_cli", &cli, py::arg("args"),
        py::call_guard<py::gil_scoped_release>());
}
