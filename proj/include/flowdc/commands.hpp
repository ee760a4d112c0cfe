// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowdc/diagnostics.hpp"
#include "flowdc/pipeline.hpp"
#include "flowdc/scenario.hpp"
#include "flowdc/wire.hpp"

namespace flowdc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods{"flowdc", "flowedit", "multiround", "flowdc-no-vod", "flowdc-no-pso"};
  return methods;
}

inline bool is_known_method(const std::string& m) {
  for (const auto& k : known_methods()) {
    if (k == m) return true;
  }
  return false;
}

/// Runs one method on a scenario. "flowdc-no-vod" pins lambda_orth to 1 and
/// "flowdc-no-pso" projects onto the bare displacement from t1 on.
inline RunResult run_method(const std::string& method, const VelocityField& field, const ScenarioFile& s,
                            const RunOptions& opts = {}) {
  EditConfig cfg = s.config;
  RunResult r;
  if (method == "flowdc") {
    r = run_flowdc(field, cfg.pso ? s.prompt_set() : decouple_prompt(SinglePromptDecoupler{}, s.p_src, s.p_tar), s.x_src,
                   cfg, opts);
  } else if (method == "flowdc-no-vod") {
    cfg.lambda1 = cfg.lambda_d = 1.0;
    r = run_flowdc(field, s.prompt_set(), s.x_src, cfg, opts);
  } else if (method == "flowdc-no-pso") {
    cfg.pso = false;
    r = run_flowdc(field, decouple_prompt(SinglePromptDecoupler{}, s.p_src, s.p_tar), s.x_src, cfg, opts);
  } else if (method == "flowedit") {
    r = run_flowedit(field, s.x_src, s.p_src, s.p_tar, cfg, opts);
  } else if (method == "multiround") {
    r = run_multiround(field, s.x_src, s.prompt_set(), cfg, opts);
  } else {
    fail(ErrorKind::Config, "unknown method '" + method + "'");
  }
  r.trace.method = method;
  return r;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json config_to_json(const EditConfig& c) {
  return {{"steps", c.steps},         {"t1", c.t1},
          {"t_g", c.t_g},             {"t_o", c.t_o},
          {"t_d", c.t_d},             {"lambda1", c.lambda1},
          {"lambda_d", c.lambda_d},   {"lambda_sub", c.lambda_sub},
          {"src_guidance", c.src_guidance}, {"tar_guidance", c.tar_guidance},
          {"seed", c.seed},           {"eps_ortho", c.eps_ortho},
          {"guidance_reps", c.guidance_reps}, {"resample_noise", c.resample_noise},
          {"pso", c.pso}};
}

inline nlohmann::json latent_to_json(const LatentVector& v) {
  return {{"shape", v.shape()},
          {"values", v.data()},
          {"b64", wire::encode_floats(v.values(), wire::FloatEncoding::Base64)["b64"]}};
}

inline nlohmann::json record_to_json(const TraceRecord& r, const std::string& method) {
  auto opt = [](const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); };
  nlohmann::json j{{"method", method},
                   {"step", r.step},
                   {"t", r.t},
                   {"phase", r.phase},
                   {"trajectory", r.trajectory},
                   {"round", r.round},
                   {"main", r.main},
                   {"basis_source", std::string(to_string(r.basis_source))},
                   {"basis_size", r.basis_size},
                   {"dropped", r.dropped},
                   {"v_norm", r.v_norm},
                   {"v_sub_norm", opt(r.v_sub_norm)},
                   {"v_orth_norm", opt(r.v_orth_norm)},
                   {"lambda_orth", opt(r.lambda_orth)},
                   {"v_sub_single_norm", opt(r.v_sub_single_norm)},
                   {"v_prime_norm", r.v_prime_norm},
                   {"step_norm", r.step_norm},
                   {"dot_prev", opt(r.dot_prev)}};
  if (r.snapshot) j["snapshot"] = latent_to_json(*r.snapshot);
  return j;
}

inline TraceRecord record_from_json(const nlohmann::json& j) {
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
  };
  TraceRecord r;
  try {
    r.step = j.at("step").get<int>();
    r.t = j.at("t").get<double>();
    r.phase = j.at("phase").get<int>();
    r.trajectory = j.at("trajectory").get<int>();
    r.round = j.at("round").get<int>();
    r.main = j.at("main").get<bool>();
    r.basis_source = basis_source_from(j.at("basis_source").get<std::string>());
    r.basis_size = j.at("basis_size").get<int>();
    r.dropped = j.at("dropped").get<int>();
    r.v_norm = j.at("v_norm").get<double>();
    r.v_sub_norm = opt("v_sub_norm");
    r.v_orth_norm = opt("v_orth_norm");
    r.lambda_orth = opt("lambda_orth");
    r.v_sub_single_norm = opt("v_sub_single_norm");
    r.v_prime_norm = j.at("v_prime_norm").get<double>();
    r.step_norm = j.at("step_norm").get<double>();
    r.dot_prev = opt("dot_prev");
    if (j.contains("snapshot")) {
      const auto& s = j["snapshot"];
      r.snapshot = LatentVector(wire::decode_floats(s.at("values"), ErrorKind::Config), s.at("shape").get<Shape>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("malformed trace record: ") + e.what());
  }
  return r;
}

inline void write_trace_jsonl(std::ostream& os, const RunTrace& trace) {
  for (const auto& r : trace.records) os << record_to_json(r, trace.method).dump() << '\n';
}

inline RunTrace read_trace_jsonl(std::istream& is) {
  RunTrace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorKind::Config, "trace line " + std::to_string(lineno) + " is not a JSON object");
    if (j.contains("method") && j["method"].is_string()) trace.method = j["method"].get<std::string>();
    trace.records.push_back(record_from_json(j));
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Comparison proxies

/// Source-consistency and semantic-alignment proxies of an endpoint.
///
/// Target coordinates are the scenario's `target_coordinates`, or, for a
/// Gaussian scenario, wherever the target and source means differ.
/// nontarget_deviation = |(z - x_src) restricted to non-target coordinates|;
/// target_deviation = |(z - x_src - (mu_tar - mu_src)) on target coordinates|.
struct ComparisonRow {
  std::string method;
  double nontarget_deviation = 0.0;
  std::optional<double> target_deviation;
  double transport_cost = 0.0;
  double edit_norm = 0.0;
};

inline std::vector<bool> target_mask(const ScenarioFile& s) {
  std::vector<bool> mask(s.x_src.size(), false);
  if (!s.target_coordinates.empty()) {
    for (auto c : s.target_coordinates) mask[c] = true;
    return mask;
  }
  if (s.gaussian) {
    const auto mt = s.gaussian->mean(s.p_tar);
    const auto ms = s.gaussian->mean(s.p_src);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mt[i] != ms[i];
  }
  return mask;
}

inline ComparisonRow compare_endpoint(const ScenarioFile& s, const RunResult& r) {
  ComparisonRow row;
  row.method = r.trace.method;
  const auto mask = target_mask(s);
  const LatentVector edit = r.endpoint - s.x_src;
  row.edit_norm = norm(edit);
  double non = 0.0;
  for (std::size_t i = 0; i < edit.size(); ++i) {
    if (!mask[i]) non += edit[i] * edit[i];
  }
  row.nontarget_deviation = std::sqrt(non);
  if (s.gaussian) {
    const auto mt = s.gaussian->mean(s.p_tar);
    const auto ms = s.gaussian->mean(s.p_src);
    double tgt = 0.0;
    for (std::size_t i = 0; i < edit.size(); ++i) {
      if (!mask[i]) continue;
      const double e = edit[i] - (mt[i] - ms[i]);
      tgt += e * e;
    }
    row.target_deviation = std::sqrt(tgt);
  }
  row.transport_cost = r.trace.records.empty() ? 0.0 : transport_cost(r.trace);
  return row;
}

inline void write_compare_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  os << "method,nontarget_deviation,target_deviation,transport_cost,edit_norm\n";
  for (const auto& r : rows) {
    os << r.method << ',' << format_double(r.nontarget_deviation) << ','
       << (r.target_deviation ? format_double(*r.target_deviation) : std::string()) << ','
       << format_double(r.transport_cost) << ',' << format_double(r.edit_norm) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Commands

namespace command_detail {

inline void report_error(std::ostream& err, const std::string& command, const Error& e) {
  err << nlohmann::json{{"command", command}, {"kind", std::string(to_string(e.kind()))}, {"error", e.what()}}.dump()
      << '\n';
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::InvalidArgument, "cannot write '" + path.string() + "'");
  return out;
}

inline int exit_code_for(const Error& e) { return e.kind() == ErrorKind::Config ? kExitConfig : kExitRuntime; }

}  // namespace command_detail

/// `run`: writes trace.jsonl, result.json and diagnostics.csv into `out_dir`.
inline int cmd_run(const std::string& config_path, const std::string& method, const std::string& out_dir,
                   std::optional<std::uint64_t> seed, bool snapshots, std::ostream& err = std::cerr) {
  ScenarioFile s;
  try {
    s = load_scenario(config_path);
    if (seed) s.config.seed = *seed;
    if (!is_known_method(method)) fail(ErrorKind::Config, "unknown method '" + method + "'");
  } catch (const Error& e) {
    command_detail::report_error(err, "run", e);
    return kExitConfig;
  }
  try {
    const auto field = s.make_field();
    const RunResult r = run_method(method, *field, s, {snapshots});
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    auto trace_out = command_detail::open_output(dir / "trace.jsonl");
    write_trace_jsonl(trace_out, r.trace);

    nlohmann::json result{{"method", method},
                          {"seed", s.config.seed},
                          {"config", config_to_json(s.config)},
                          {"prompts", {{"source", s.p_src}, {"target", s.p_tar}, {"intermediates", s.prompt_set().intermediates}}},
                          {"x_src", latent_to_json(s.x_src)},
                          {"endpoint", latent_to_json(r.endpoint)},
                          {"transport_cost", r.trace.records.empty() ? 0.0 : transport_cost(r.trace)}};
    auto result_out = command_detail::open_output(dir / "result.json");
    result_out << result.dump(2) << '\n';

    auto diag_out = command_detail::open_output(dir / "diagnostics.csv");
    write_diagnostics_csv(diag_out, make_diagnostics(r.trace));
    if (!trace_out || !result_out || !diag_out) fail(ErrorKind::InvalidArgument, "failed writing outputs to " + out_dir);
  } catch (const Error& e) {
    command_detail::report_error(err, "run", e);
    return kExitRuntime;
  } catch (const std::filesystem::filesystem_error& e) {
    command_detail::report_error(err, "run", Error(ErrorKind::InvalidArgument, e.what()));
    return kExitRuntime;
  }
  return kExitOk;
}

/// `compare`: runs every method under the scenario seed and writes
/// compare.csv plus one diagnostics_<method>.csv per method.
inline int cmd_compare(const std::string& config_path, const std::vector<std::string>& methods,
                       const std::string& out_dir, std::ostream& err = std::cerr) {
  ScenarioFile s;
  try {
    s = load_scenario(config_path);
    if (methods.empty()) fail(ErrorKind::Config, "no methods given");
    for (const auto& m : methods) {
      if (!is_known_method(m)) fail(ErrorKind::Config, "unknown method '" + m + "'");
    }
  } catch (const Error& e) {
    command_detail::report_error(err, "compare", e);
    return kExitConfig;
  }
  try {
    const auto field = s.make_field();
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    std::vector<ComparisonRow> rows;
    for (const auto& m : methods) {
      const RunResult r = run_method(m, *field, s);
      rows.push_back(compare_endpoint(s, r));
      auto diag_out = command_detail::open_output(dir / ("diagnostics_" + m + ".csv"));
      write_diagnostics_csv(diag_out, make_diagnostics(r.trace));
    }
    auto out = command_detail::open_output(dir / "compare.csv");
    write_compare_csv(out, rows);
  } catch (const Error& e) {
    command_detail::report_error(err, "compare", e);
    return kExitRuntime;
  } catch (const std::filesystem::filesystem_error& e) {
    command_detail::report_error(err, "compare", Error(ErrorKind::InvalidArgument, e.what()));
    return kExitRuntime;
  }
  return kExitOk;
}

/// `diag`: recomputes diagnostics.csv from a trace file.
inline int cmd_diag(const std::string& trace_path, const std::string& out_csv, std::ostream& err = std::cerr) {
  RunTrace trace;
  try {
    std::ifstream in(trace_path);
    if (!in) fail(ErrorKind::Config, "cannot read trace '" + trace_path + "'");
    trace = read_trace_jsonl(in);
  } catch (const Error& e) {
    command_detail::report_error(err, "diag", e);
    return kExitConfig;
  }
  try {
    auto out = command_detail::open_output(out_csv);
    write_diagnostics_csv(out, make_diagnostics(trace));
  } catch (const Error& e) {
    command_detail::report_error(err, "diag", e);
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace flowdc
