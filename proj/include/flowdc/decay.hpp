// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include "flowdc/core_flow.hpp"
#include "flowdc/ortho.hpp"

namespace flowdc {

/// Piecewise-linear decay of the out-of-subspace velocity component.
/// lambda_orth ramps linearly from lambda_d at t_d to lambda1 at t1 and is 1
/// below t_d; the jump at t_d is intentional.
struct DecaySchedule {
  double lambda1 = 0.1;
  double lambda_d = 0.64;
  double t_d = 20.0 / 28.0;
  double t1 = 27.0 / 28.0;
  double lambda_sub = 1.0;

  static DecaySchedule from(const EditConfig& cfg) { return {cfg.lambda1, cfg.lambda_d, cfg.t_d, cfg.t1, cfg.lambda_sub}; }

  /// lambda1 = lambda_d = 1: reconstruction is the identity.
  static DecaySchedule identity(double t_d, double t1) { return {1.0, 1.0, t_d, t1, 1.0}; }
};

inline double lambda_orth(double t, const DecaySchedule& s) {
  if (!(t >= 0.0 && t <= s.t1)) {
    fail(ErrorKind::InvalidArgument, "lambda_orth: t=" + std::to_string(t) + " outside [0, t1]");
  }
  if (t < s.t_d) return 1.0;
  if (s.t1 == s.t_d) fail(ErrorKind::Config, "lambda_orth: t1 == t_d leaves the decay ramp undefined");
  // std::lerp is exact at both ends, so t_d -> lambda_d and t1 -> lambda1.
  return std::lerp(s.lambda_d, s.lambda1, (t - s.t_d) / (s.t1 - s.t_d));
}

/// v' = lambda_sub * v_sub + lambda_orth(t) * v_orth.
inline LatentVector reconstruct(const VelocityDecomposition& d, double t, const DecaySchedule& s) {
  const double lo = lambda_orth(t, s);
  if (lo == 1.0 && s.lambda_sub == 1.0) return d.v;
  require_same_shape(d.v_sub, d.v_orth, "reconstruct");
  LatentVector out = d.v_sub;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.lambda_sub * d.v_sub[i] + lo * d.v_orth[i];
  return out;
}

}  // namespace flowdc
