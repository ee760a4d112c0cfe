// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowdc/core_flow.hpp"
#include "flowdc/gaussian_field.hpp"
#include "flowdc/prompts.hpp"
#include "flowdc/remote_field.hpp"

namespace flowdc {

/// A fully specified run: which velocity backend, the source latent, the
/// prompts and the hyperparameters. Loaded from JSON with unknown keys
/// rejected at every level.
///
/// {
///   "kind": "gaussian" | "remote",
///   "gaussian": {"dim": 8, "sigma": 1.0, "base_mean": [...],
///                "prompts": {"name": {"shift": [...] | {"3": 2.0}, "sigma": 1.2}}},
///   "remote": {"endpoint": "http://...", "timeout_ms": 10000, "retries": 2,
///              "batch_limit": 64, "max_in_flight": 8, "encoding": "b64" | "json"},
///   "x_src": {"vector": [...], "shape": [...]} | {"sample": {"prompt": "...", "seed": 7}},
///   "prompts": {"source": "...", "target": "a; b", "intermediates": [...]},
///   "config": {"steps": 28, "t1": "27/28", "lambda1": 0.1, "seed": 1, ...},
///   "target_coordinates": [0, 1]
/// }
///
/// Grid times accept a number or a "k/T" string. A remote scenario without an
/// "endpoint" uses $FLOWDC_VELOCITY_ENDPOINT.
struct ScenarioFile {
  enum class Kind { Gaussian, Remote };

  Kind kind = Kind::Gaussian;
  std::optional<GaussianScenario> gaussian;
  std::optional<RemoteFieldConfig> remote;
  LatentVector x_src;
  std::string p_src;
  std::string p_tar;
  std::vector<std::string> intermediates;  // empty: use the delimiter decoupler
  EditConfig config;
  std::vector<std::size_t> target_coordinates;

  std::unique_ptr<VelocityField> make_field() const {
    if (kind == Kind::Gaussian) return std::make_unique<GaussianField>(*gaussian);
    return std::make_unique<RemoteField>(*remote);
  }

  PromptSet prompt_set() const {
    if (intermediates.empty()) return decouple_prompt(DelimiterDecoupler{}, p_src, p_tar);
    PromptSet set{p_src, p_tar, intermediates, {}};
    set.validate();
    return set;
  }
};

namespace scenario_detail {

using json = nlohmann::json;

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) fail(ErrorKind::Config, where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(ErrorKind::Config, "unknown key '" + it.key() + "' in " + where);
  }
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(ErrorKind::Config, where + " must be a number");
  return j.get<double>();
}

inline long long integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(ErrorKind::Config, where + " must be an integer");
  return j.get<long long>();
}

inline std::string string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(ErrorKind::Config, where + " must be a string");
  return j.get<std::string>();
}

/// A grid time: a number, or "k/T".
inline double grid_time(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const auto slash = s.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        const double x = std::stod(s, &used);
        if (used == s.size()) return x;
      } else {
        const double num = std::stod(s.substr(0, slash), &used);
        if (used == slash) {
          const std::string den_text = s.substr(slash + 1);
          const double den = std::stod(den_text, &used);
          if (used == den_text.size() && den != 0.0) return num / den;
        }
      }
    } catch (const std::exception&) {
    }
  }
  fail(ErrorKind::Config, where + " must be a number or a \"k/T\" string");
}

inline std::vector<double> floats(const json& j, std::size_t dim, const std::string& where) {
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& x : j) out.push_back(number(x, where + " entry"));
    if (dim && out.size() != dim) fail(ErrorKind::Config, where + " must have " + std::to_string(dim) + " entries");
    return out;
  }
  if (j.is_object() && dim) {
    std::vector<double> out(dim, 0.0);
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(it.key(), &used);
        if (used != it.key().size()) throw std::invalid_argument("index");
      } catch (const std::exception&) {
        fail(ErrorKind::Config, where + " sparse key '" + it.key() + "' is not an index");
      }
      if (idx >= dim) fail(ErrorKind::Config, where + " index " + it.key() + " out of range");
      out[idx] = number(it.value(), where + "[" + it.key() + "]");
    }
    return out;
  }
  fail(ErrorKind::Config, where + " must be an array" + std::string(dim ? " or a sparse {index: value} object" : ""));
}

inline GaussianScenario parse_gaussian(const json& j) {
  check_keys(j, {"dim", "sigma", "base_mean", "prompts"}, "gaussian");
  if (!j.contains("dim")) fail(ErrorKind::Config, "gaussian.dim is required");
  const long long dim = integer(j["dim"], "gaussian.dim");
  if (dim <= 0) fail(ErrorKind::Config, "gaussian.dim must be positive");
  GaussianScenario scn;
  scn.dim = static_cast<std::size_t>(dim);
  if (j.contains("sigma")) scn.default_sigma = number(j["sigma"], "gaussian.sigma");
  if (j.contains("base_mean")) scn.base_mean = floats(j["base_mean"], scn.dim, "gaussian.base_mean");
  if (j.contains("prompts")) {
    if (!j["prompts"].is_object()) fail(ErrorKind::Config, "gaussian.prompts must be an object");
    for (auto it = j["prompts"].begin(); it != j["prompts"].end(); ++it) {
      const std::string where = "gaussian.prompts['" + it.key() + "']";
      check_keys(it.value(), {"shift", "sigma"}, where);
      GaussianScenario::PromptEntry entry;
      entry.shift = it.value().contains("shift") ? floats(it.value()["shift"], scn.dim, where + ".shift")
                                                 : std::vector<double>(scn.dim, 0.0);
      if (it.value().contains("sigma")) entry.sigma = number(it.value()["sigma"], where + ".sigma");
      scn.prompts[it.key()] = std::move(entry);
    }
  }
  scn.validate();
  return scn;
}

inline RemoteFieldConfig parse_remote(const json& j) {
  check_keys(j, {"endpoint", "timeout_ms", "retries", "batch_limit", "max_in_flight", "encoding"}, "remote");
  RemoteFieldConfig cfg;
  cfg.endpoint = j.contains("endpoint") ? string(j["endpoint"], "remote.endpoint") : default_endpoint();
  if (j.contains("timeout_ms")) cfg.timeout_ms = static_cast<int>(integer(j["timeout_ms"], "remote.timeout_ms"));
  if (j.contains("retries")) cfg.retries = static_cast<int>(integer(j["retries"], "remote.retries"));
  if (j.contains("batch_limit")) cfg.batch_limit = static_cast<int>(integer(j["batch_limit"], "remote.batch_limit"));
  if (j.contains("max_in_flight")) cfg.max_in_flight = static_cast<int>(integer(j["max_in_flight"], "remote.max_in_flight"));
  if (j.contains("encoding")) {
    const std::string enc = string(j["encoding"], "remote.encoding");
    if (enc == "json") {
      cfg.encoding = wire::FloatEncoding::Json;
    } else if (enc == "b64") {
      cfg.encoding = wire::FloatEncoding::Base64;
    } else {
      fail(ErrorKind::Config, "remote.encoding must be \"json\" or \"b64\"");
    }
  }
  cfg.validate();
  return cfg;
}

inline void apply_config(const json& j, EditConfig& cfg) {
  check_keys(j,
             {"steps", "t1", "t_g", "t_o", "t_d", "lambda1", "lambda_d", "lambda_sub", "src_guidance", "tar_guidance",
              "seed", "eps_ortho", "guidance_reps", "resample_noise", "pso"},
             "config");
  if (j.contains("steps")) cfg.steps = static_cast<int>(integer(j["steps"], "config.steps"));
  if (j.contains("t1")) cfg.t1 = grid_time(j["t1"], "config.t1");
  if (j.contains("t_g")) cfg.t_g = grid_time(j["t_g"], "config.t_g");
  if (j.contains("t_o")) cfg.t_o = grid_time(j["t_o"], "config.t_o");
  if (j.contains("t_d")) cfg.t_d = grid_time(j["t_d"], "config.t_d");
  if (j.contains("lambda1")) cfg.lambda1 = number(j["lambda1"], "config.lambda1");
  if (j.contains("lambda_d")) cfg.lambda_d = number(j["lambda_d"], "config.lambda_d");
  if (j.contains("lambda_sub")) cfg.lambda_sub = number(j["lambda_sub"], "config.lambda_sub");
  if (j.contains("src_guidance")) cfg.src_guidance = number(j["src_guidance"], "config.src_guidance");
  if (j.contains("tar_guidance")) cfg.tar_guidance = number(j["tar_guidance"], "config.tar_guidance");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail(ErrorKind::Config, "config.seed must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("eps_ortho")) cfg.eps_ortho = number(j["eps_ortho"], "config.eps_ortho");
  if (j.contains("guidance_reps")) cfg.guidance_reps = static_cast<int>(integer(j["guidance_reps"], "config.guidance_reps"));
  if (j.contains("resample_noise")) {
    if (!j["resample_noise"].is_boolean()) fail(ErrorKind::Config, "config.resample_noise must be a boolean");
    cfg.resample_noise = j["resample_noise"].get<bool>();
  }
  if (j.contains("pso")) {
    if (!j["pso"].is_boolean()) fail(ErrorKind::Config, "config.pso must be a boolean");
    cfg.pso = j["pso"].get<bool>();
  }
}

}  // namespace scenario_detail

/// Parses and validates a scenario document. All failures are Config errors.
inline ScenarioFile parse_scenario(const nlohmann::json& j) {
  using namespace scenario_detail;
  check_keys(j, {"kind", "gaussian", "remote", "x_src", "prompts", "config", "target_coordinates"}, "scenario");
  ScenarioFile s;

  const std::string kind = j.contains("kind") ? string(j["kind"], "kind") : "gaussian";
  if (kind == "gaussian") {
    s.kind = ScenarioFile::Kind::Gaussian;
    if (!j.contains("gaussian")) fail(ErrorKind::Config, "gaussian scenario needs a 'gaussian' section");
    if (j.contains("remote")) fail(ErrorKind::Config, "gaussian scenario must not have a 'remote' section");
    s.gaussian = parse_gaussian(j["gaussian"]);
  } else if (kind == "remote") {
    s.kind = ScenarioFile::Kind::Remote;
    if (j.contains("gaussian")) fail(ErrorKind::Config, "remote scenario must not have a 'gaussian' section");
    s.remote = parse_remote(j.contains("remote") ? j["remote"] : json::object());
  } else {
    fail(ErrorKind::Config, "kind must be \"gaussian\" or \"remote\"");
  }

  if (!j.contains("prompts")) fail(ErrorKind::Config, "'prompts' section is required");
  const auto& p = j["prompts"];
  check_keys(p, {"source", "target", "intermediates"}, "prompts");
  if (!p.contains("source") || !p.contains("target")) fail(ErrorKind::Config, "prompts.source and prompts.target are required");
  s.p_src = string(p["source"], "prompts.source");
  s.p_tar = string(p["target"], "prompts.target");
  if (s.p_tar.empty()) fail(ErrorKind::Config, "prompts.target must not be empty");
  if (p.contains("intermediates")) {
    if (!p["intermediates"].is_array()) fail(ErrorKind::Config, "prompts.intermediates must be an array");
    for (const auto& x : p["intermediates"]) s.intermediates.push_back(string(x, "prompts.intermediates entry"));
  }

  if (j.contains("config")) apply_config(j["config"], s.config);

  if (!j.contains("x_src")) fail(ErrorKind::Config, "'x_src' section is required");
  const auto& xs = j["x_src"];
  check_keys(xs, {"vector", "shape", "sample"}, "x_src");
  if (xs.contains("vector") == xs.contains("sample")) {
    fail(ErrorKind::Config, "x_src needs exactly one of 'vector' or 'sample'");
  }
  if (xs.contains("vector")) {
    auto data = floats(xs["vector"], 0, "x_src.vector");
    if (data.empty()) fail(ErrorKind::Config, "x_src.vector must not be empty");
    Shape shape{data.size()};
    if (xs.contains("shape")) {
      shape.clear();
      if (!xs["shape"].is_array()) fail(ErrorKind::Config, "x_src.shape must be an array");
      for (const auto& d : xs["shape"]) {
        const long long v = integer(d, "x_src.shape entry");
        if (v <= 0) fail(ErrorKind::Config, "x_src.shape entries must be positive");
        shape.push_back(static_cast<std::size_t>(v));
      }
    }
    try {
      s.x_src = LatentVector(std::move(data), std::move(shape));
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("x_src: ") + e.what());
    }
  } else {
    if (xs.contains("shape")) fail(ErrorKind::Config, "x_src.shape only applies to an explicit vector");
    const auto& sample = xs["sample"];
    check_keys(sample, {"prompt", "seed"}, "x_src.sample");
    if (!s.gaussian) fail(ErrorKind::Config, "x_src.sample requires a gaussian scenario");
    const std::string prompt = sample.contains("prompt") ? string(sample["prompt"], "x_src.sample.prompt") : s.p_src;
    std::uint64_t seed = 0;
    if (sample.contains("seed")) {
      if (!sample["seed"].is_number_unsigned()) fail(ErrorKind::Config, "x_src.sample.seed must be a non-negative integer");
      seed = sample["seed"].get<std::uint64_t>();
    }
    try {
      s.x_src = sample_prompt(*s.gaussian, prompt, seed);
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("x_src.sample: ") + e.what());
    }
  }
  if (!s.x_src.all_finite()) fail(ErrorKind::Config, "x_src has non-finite entries");

  if (j.contains("target_coordinates")) {
    if (!j["target_coordinates"].is_array()) fail(ErrorKind::Config, "target_coordinates must be an array");
    for (const auto& c : j["target_coordinates"]) {
      const long long v = integer(c, "target_coordinates entry");
      if (v < 0 || static_cast<std::size_t>(v) >= s.x_src.size()) fail(ErrorKind::Config, "target coordinate out of range");
      s.target_coordinates.push_back(static_cast<std::size_t>(v));
    }
  }

  // Everything the run needs must resolve now, so a bad file fails as a
  // config error rather than mid-run.
  try {
    s.config.validate();
    const PromptSet set = s.prompt_set();
    if (s.gaussian) {
      if (s.x_src.size() != s.gaussian->dim) fail(ErrorKind::Config, "x_src length does not match gaussian.dim");
      s.gaussian->resolve(s.p_src);
      for (std::size_t i = 0; i < set.count(); ++i) {
        s.gaussian->resolve(set.intermediates[i]);
        s.gaussian->resolve(set.clause(i));
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, e.what());
  }
  return s;
}

inline ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot read config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, "config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_scenario(j);
}

}  // namespace flowdc
