// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include <httplib.h>

#include "flowdc/field.hpp"
#include "flowdc/wire.hpp"

namespace flowdc {

inline constexpr const char* kEndpointEnvVar = "FLOWDC_VELOCITY_ENDPOINT";

struct RemoteFieldConfig {
  std::string endpoint = "http://127.0.0.1:8765";
  int timeout_ms = 10000;
  int retries = 2;
  int batch_limit = 64;
  int max_in_flight = 8;
  wire::FloatEncoding encoding = wire::FloatEncoding::Base64;

  void validate() const {
    if (endpoint.empty()) fail(ErrorKind::Config, "remote endpoint must not be empty");
    if (timeout_ms <= 0) fail(ErrorKind::Config, "timeout_ms must be positive");
    if (retries < 0) fail(ErrorKind::Config, "retries must be >= 0");
    if (batch_limit < 1) fail(ErrorKind::Config, "batch_limit must be >= 1");
    if (max_in_flight < 1) fail(ErrorKind::Config, "max_in_flight must be >= 1");
  }
};

/// Endpoint from the environment, or the built-in default.
inline std::string default_endpoint() {
  if (const char* env = std::getenv(kEndpointEnvVar); env && *env) return env;
  return RemoteFieldConfig{}.endpoint;
}

namespace detail {

inline ErrorKind kind_for_status(int status) {
  if (status == 422) return ErrorKind::Unprocessable;
  if (status >= 400 && status < 500) return ErrorKind::BadRequest;
  return ErrorKind::ServerError;
}

/// POST/GET with the retry policy: transport failures (connection errors and
/// timeouts) are retried up to `cfg.retries` times; any HTTP response is
/// final.
inline wire::json http_call(const RemoteFieldConfig& cfg, const std::string& path, const wire::json* body) {
  const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);
  Error last(ErrorKind::Transport, "no attempt made");
  for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
    httplib::Client client(cfg.endpoint);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = body ? client.Post(path, body->dump(), "application/json") : client.Get(path);
    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                             err == httplib::Error::Write;
      last = Error(timed_out ? ErrorKind::Timeout : ErrorKind::Transport,
                   cfg.endpoint + path + ": " + httplib::to_string(err));
      continue;
    }
    if (res->status != 200) {
      std::string message = "HTTP " + std::to_string(res->status);
      auto parsed = wire::json::parse(res->body, nullptr, false);
      if (parsed.is_object() && parsed.contains("error") && parsed["error"].is_string()) {
        message += ": " + parsed["error"].get<std::string>();
      }
      fail(kind_for_status(res->status), cfg.endpoint + path + ": " + message);
    }
    auto parsed = wire::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) fail(ErrorKind::MalformedResponse, cfg.endpoint + path + ": response is not JSON");
    return parsed;
  }
  throw last;
}

}  // namespace detail

/// Single query against POST /v1/velocity.
inline LatentVector remote_evaluate(const RemoteFieldConfig& cfg, const VelocityQuery& query) {
  const wire::json body = wire::encode_query(query, cfg.encoding);
  const wire::json response = detail::http_call(cfg, "/v1/velocity", &body);
  return wire::decode_response(response, query.latent);
}

inline wire::json remote_health(const RemoteFieldConfig& cfg) { return detail::http_call(cfg, "/v1/health", nullptr); }

/// Velocity backend behind the HTTP wire protocol. Batches are split into
/// chunks of at most `batch_limit` queries; results are matched to queries by
/// position. Concurrent callers are limited to `max_in_flight` requests.
class RemoteField final : public VelocityField {
 public:
  explicit RemoteField(RemoteFieldConfig cfg)
      : cfg_(std::move(cfg)), in_flight_(std::make_shared<std::counting_semaphore<>>(cfg_.max_in_flight)) {
    cfg_.validate();
  }

  LatentVector evaluate(const LatentVector& z, double t, const std::string& prompt, double guidance) const override {
    Slot slot(*in_flight_);
    return remote_evaluate(cfg_, {z, t, prompt, guidance});
  }

  std::vector<LatentVector> evaluate_batch(std::span<const VelocityQuery> queries) const override {
    std::vector<LatentVector> out;
    out.reserve(queries.size());
    for (std::size_t start = 0; start < queries.size(); start += cfg_.batch_limit) {
      const auto chunk = queries.subspan(start, std::min<std::size_t>(cfg_.batch_limit, queries.size() - start));
      wire::json body{{"queries", wire::json::array()}};
      for (const auto& q : chunk) body["queries"].push_back(wire::encode_query(q, cfg_.encoding));
      wire::json response;
      {
        Slot slot(*in_flight_);
        response = detail::http_call(cfg_, "/v1/velocity_batch", &body);
      }
      if (!response.is_object() || !response.contains("results") || !response["results"].is_array()) {
        fail(ErrorKind::MalformedResponse, "batch response lacks 'results'");
      }
      const auto& results = response["results"];
      if (results.size() != chunk.size()) {
        fail(ErrorKind::MalformedResponse, "batch response has " + std::to_string(results.size()) + " results for " +
                                               std::to_string(chunk.size()) + " queries");
      }
      for (std::size_t i = 0; i < chunk.size(); ++i) out.push_back(wire::decode_response(results[i], chunk[i].latent));
    }
    return out;
  }

  const RemoteFieldConfig& config() const noexcept { return cfg_; }

 private:
  struct Slot {
    explicit Slot(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
    ~Slot() { sem.release(); }
    std::counting_semaphore<>& sem;
  };

  RemoteFieldConfig cfg_;
  std::shared_ptr<std::counting_semaphore<>> in_flight_;
};

}  // namespace flowdc
