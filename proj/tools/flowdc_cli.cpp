// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowdc/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Decoupled complex flow editing: runs, comparisons and trajectory diagnostics"};
  app.require_subcommand(1);

  std::string config, method = "flowdc", out;
  std::uint64_t seed = 0;
  bool snapshots = false;
  auto* run = app.add_subcommand("run", "Run one editing method and write trace.jsonl, result.json, diagnostics.csv");
  run->add_option("--config", config, "Scenario JSON file")->required();
  run->add_option("--method", method, "flowdc | flowedit | multiround | flowdc-no-vod | flowdc-no-pso");
  run->add_option("--out", out, "Output directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the run seed");
  run->add_flag("--snapshots", snapshots, "Store full state snapshots in the trace");

  std::vector<std::string> methods{"flowdc", "flowedit", "multiround"};
  auto* compare = app.add_subcommand("compare", "Run several methods on one scenario and tabulate compare.csv");
  compare->add_option("--config", config, "Scenario JSON file")->required();
  compare->add_option("--methods", methods, "Comma-separated method list")->delimiter(',');
  compare->add_option("--out", out, "Output directory")->required();

  std::string trace_path, csv_path;
  auto* diag = app.add_subcommand("diag", "Recompute diagnostics.csv from a trace file");
  diag->add_option("--trace", trace_path, "trace.jsonl")->required();
  diag->add_option("--out", csv_path, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : flowdc::kExitConfig;
  }

  if (run->parsed()) {
    return flowdc::cmd_run(config, method, out, seed_opt->count() ? std::optional(seed) : std::nullopt, snapshots);
  }
  if (compare->parsed()) {
    return flowdc::cmd_compare(config, methods, out);
  }
  return flowdc::cmd_diag(trace_path, csv_path);
}
