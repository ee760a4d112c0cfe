// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flowdc {

enum class ErrorKind {
  InvalidArgument,
  ShapeMismatch,
  NonFinite,
  Config,
  UnknownPrompt,
  Timeout,
  Transport,
  MalformedResponse,
  BadRequest,      // HTTP 400
  Unprocessable,   // HTTP 422
  ServerError,     // HTTP 5xx
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::ShapeMismatch: return "shape_mismatch";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::Config: return "config";
    case ErrorKind::UnknownPrompt: return "unknown_prompt";
    case ErrorKind::Timeout: return "timeout";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::MalformedResponse: return "malformed_response";
    case ErrorKind::BadRequest: return "bad_request";
    case ErrorKind::Unprocessable: return "unprocessable";
    case ErrorKind::ServerError: return "server_error";
  }
  return "unknown";
}

/// Exception type used throughout the library. The kind survives context
/// wrapping so callers can branch on it after a run aborts.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Returns a copy with `context` prepended to the message.
  Error with_context(const std::string& context) const {
    return Error(kind_, context + ": " + what());
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace flowdc
