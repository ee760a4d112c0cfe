// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flowdc/field.hpp"

// Velocity wire protocol (HTTP + JSON).
//
//   POST /v1/velocity        {"latent": <floats>, "shape": [ints], "t": x, "prompt": s, "guidance": g}
//                         -> {"velocity": <floats>}
//   POST /v1/velocity_batch  {"queries": [<query>...]} -> {"results": [<response>...]}
//   GET  /v1/health          -> {"status": "ok", "dim_hint": int | null}
//
// <floats> is either a JSON number array or {"b64": "..."} holding the
// little-endian IEEE-754 binary64 bytes. Errors are 400 (malformed), 422
// (unregistered prompt, bad shape) and 500 (backend failure), each with body
// {"error": message, "kind": kind}.
namespace flowdc::wire {

using json = nlohmann::json;

enum class FloatEncoding { Json, Base64 };

namespace detail {
inline constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}
}  // namespace detail

inline std::string base64_encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = (std::uint8_t(bytes[i]) << 16) | (std::uint8_t(bytes[i + 1]) << 8) | std::uint8_t(bytes[i + 2]);
    out += detail::kAlphabet[(n >> 18) & 63];
    out += detail::kAlphabet[(n >> 12) & 63];
    out += detail::kAlphabet[(n >> 6) & 63];
    out += detail::kAlphabet[n & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t n = std::uint8_t(bytes[i]) << 16;
    if (rest == 2) n |= std::uint8_t(bytes[i + 1]) << 8;
    out += detail::kAlphabet[(n >> 18) & 63];
    out += detail::kAlphabet[(n >> 12) & 63];
    out += rest == 2 ? detail::kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

inline std::string base64_decode(std::string_view text, ErrorKind on_error) {
  if (text.size() % 4 != 0) fail(on_error, "base64 payload length is not a multiple of 4");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = text[i + j];
      if (c == '=' && i + 4 == text.size() && j >= 2) {
        v[j] = 0;
        ++pad;
        continue;
      }
      if (pad) fail(on_error, "invalid base64 padding");
      v[j] = detail::decode_char(c);
      if (v[j] < 0) fail(on_error, "invalid base64 character");
    }
    const std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out += char((n >> 16) & 0xff);
    if (pad < 2) out += char((n >> 8) & 0xff);
    if (pad < 1) out += char(n & 0xff);
  }
  return out;
}

inline json encode_floats(std::span<const double> values, FloatEncoding enc) {
  if (enc == FloatEncoding::Json) return json(std::vector<double>(values.begin(), values.end()));
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = char((bits >> (8 * b)) & 0xff);
  }
  return json{{"b64", base64_encode(bytes)}};
}

inline std::vector<double> decode_floats(const json& j, ErrorKind on_error) {
  std::vector<double> out;
  if (j.is_array()) {
    out.reserve(j.size());
    for (const auto& x : j) {
      if (!x.is_number()) fail(on_error, "float array contains a non-number");
      out.push_back(x.get<double>());
    }
    return out;
  }
  if (j.is_object() && j.size() == 1 && j.contains("b64") && j["b64"].is_string()) {
    const std::string bytes = base64_decode(j["b64"].get<std::string>(), on_error);
    if (bytes.size() % 8 != 0) fail(on_error, "binary float payload length is not a multiple of 8");
    out.resize(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= std::uint64_t(std::uint8_t(bytes[i * 8 + b])) << (8 * b);
      out[i] = std::bit_cast<double>(bits);
    }
    return out;
  }
  fail(on_error, "expected a float array or {\"b64\": ...}");
}

inline json encode_query(const VelocityQuery& q, FloatEncoding enc) {
  return json{{"latent", encode_floats(q.latent.values(), enc)},
              {"shape", q.latent.shape()},
              {"t", q.t},
              {"prompt", q.prompt},
              {"guidance", q.guidance}};
}

/// Parses a query body; malformed input raises BadRequest, a latent that does
/// not match its shape raises Unprocessable.
inline VelocityQuery decode_query(const json& j) {
  if (!j.is_object()) fail(ErrorKind::BadRequest, "query must be an object");
  for (const char* key : {"latent", "shape", "t", "prompt", "guidance"}) {
    if (!j.contains(key)) fail(ErrorKind::BadRequest, std::string("query is missing '") + key + "'");
  }
  if (!j["shape"].is_array() || !j["t"].is_number() || !j["prompt"].is_string() || !j["guidance"].is_number()) {
    fail(ErrorKind::BadRequest, "query field has the wrong type");
  }
  Shape shape;
  for (const auto& d : j["shape"]) {
    if (!d.is_number_integer() || d.get<long long>() <= 0) fail(ErrorKind::Unprocessable, "shape entries must be positive integers");
    shape.push_back(d.get<std::size_t>());
  }
  auto data = decode_floats(j["latent"], ErrorKind::BadRequest);
  if (shape.empty() || shape_size(shape) != data.size()) fail(ErrorKind::Unprocessable, "latent does not match shape");
  return {LatentVector(std::move(data), std::move(shape)), j["t"].get<double>(), j["prompt"].get<std::string>(),
          j["guidance"].get<double>()};
}

inline json encode_response(const LatentVector& v, FloatEncoding enc) {
  return json{{"velocity", encode_floats(v.values(), enc)}};
}

/// Parses a response and checks it against the query it answers.
inline LatentVector decode_response(const json& j, const LatentVector& query) {
  if (!j.is_object() || !j.contains("velocity")) fail(ErrorKind::MalformedResponse, "response lacks 'velocity'");
  auto data = decode_floats(j["velocity"], ErrorKind::MalformedResponse);
  if (data.size() != query.size()) {
    fail(ErrorKind::ShapeMismatch, "response has " + std::to_string(data.size()) + " values, expected " +
                                       std::to_string(query.size()));
  }
  LatentVector v(std::move(data), query.shape());
  require_finite(v, "remote velocity");
  return v;
}

inline json error_body(ErrorKind kind, const std::string& message) {
  return json{{"error", message}, {"kind", std::string(to_string(kind))}};
}

inline int http_status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadRequest: return 400;
    case ErrorKind::Unprocessable:
    case ErrorKind::UnknownPrompt:
    case ErrorKind::ShapeMismatch: return 422;
    default: return 500;
  }
}

}  // namespace flowdc::wire
