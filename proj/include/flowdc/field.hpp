// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "flowdc/latent.hpp"

namespace flowdc {

/// One prompt-conditioned velocity query v(z, t, prompt) with the guidance
/// scale forwarded to the backend.
struct VelocityQuery {
  LatentVector latent;
  double t = 1.0;
  std::string prompt;
  double guidance = 1.0;
};

/// A prompt-conditioned velocity backend. The engine never interprets the
/// guidance scale itself; each backend defines what it means.
class VelocityField {
 public:
  virtual ~VelocityField() = default;

  virtual LatentVector evaluate(const LatentVector& z, double t, const std::string& prompt, double guidance) const = 0;

  /// Results are returned in query order. Backends that can serve several
  /// queries in one round trip override this.
  virtual std::vector<LatentVector> evaluate_batch(std::span<const VelocityQuery> queries) const {
    std::vector<LatentVector> out;
    out.reserve(queries.size());
    for (const auto& q : queries) out.push_back(evaluate(q.latent, q.t, q.prompt, q.guidance));
    return out;
  }
};

/// Checks the output contract of a backend response against its query.
inline void validate_velocity(const LatentVector& query, const LatentVector& velocity) {
  if (velocity.shape() != query.shape()) {
    fail(ErrorKind::ShapeMismatch, "velocity shape " + shape_string(velocity.shape()) + " does not match query shape " +
                                       shape_string(query.shape()));
  }
  require_finite(velocity, "velocity");
}

}  // namespace flowdc
