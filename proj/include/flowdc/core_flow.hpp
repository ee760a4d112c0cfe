// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "flowdc/field.hpp"
#include "flowdc/latent.hpp"

namespace flowdc {

/// Uniform descending grid t_k = k/T, k = T..0.
class TimeGrid {
 public:
  explicit TimeGrid(int steps) : steps_(steps) {
    if (steps < 1) fail(ErrorKind::InvalidArgument, "time grid needs at least one step");
  }

  int steps() const noexcept { return steps_; }
  double delta() const noexcept { return 1.0 / steps_; }
  double time(int k) const noexcept { return static_cast<double>(k) / steps_; }

  /// Grid index of `t`; throws if `t` is not a multiple of 1/T within 1e-9.
  int index_of(double t, const char* what = "time") const {
    const double scaled = t * steps_;
    const double k = std::round(scaled);
    if (!(t >= 0.0 && t <= 1.0) || std::abs(scaled - k) > 1e-9) {
      fail(ErrorKind::Config, std::string(what) + "=" + std::to_string(t) + " is not a grid time of T=" +
                                  std::to_string(steps_));
    }
    return static_cast<int>(k);
  }

  /// Times t_T, ..., t_0.
  std::vector<double> times() const {
    std::vector<double> out;
    out.reserve(steps_ + 1);
    for (int k = steps_; k >= 0; --k) out.push_back(time(k));
    return out;
  }

 private:
  int steps_;
};

/// Scalar hyperparameters of an editing run. Defaults are the reference
/// operating point for 28-step editing.
struct EditConfig {
  int steps = 28;
  double t1 = 27.0 / 28.0;
  double t_g = 22.0 / 28.0;
  double t_o = 27.0 / 28.0;
  double t_d = 20.0 / 28.0;
  double lambda1 = 0.1;
  double lambda_d = 0.64;
  double lambda_sub = 1.0;
  double src_guidance = 1.5;
  double tar_guidance = 5.5;
  std::uint64_t seed = 0;
  double eps_ortho = 1e-8;
  int guidance_reps = 3;
  // Draw a fresh X_1 at every step instead of one per run.
  bool resample_noise = false;
  // Off: the subspace is the current displacement at every step ({d^n}),
  // with no prompt decoupling or guidance velocities.
  bool pso = true;

  TimeGrid grid() const { return TimeGrid(steps); }
  int k1() const { return grid().index_of(t1, "t1"); }
  int k_g() const { return grid().index_of(t_g, "t_g"); }
  int k_o() const { return grid().index_of(t_o, "t_o"); }
  int k_d() const { return grid().index_of(t_d, "t_d"); }

  void validate() const {
    if (steps < 1) fail(ErrorKind::Config, "steps must be >= 1");
    const int a = k1(), g = k_g(), o = k_o(), d = k_d();
    (void)g;
    if (a < 1) fail(ErrorKind::Config, "t1 must be positive");
    if (d > a) fail(ErrorKind::Config, "t_d must not exceed t1");
    if (o > a) fail(ErrorKind::Config, "t_o must not exceed t1");
    auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!unit(lambda1) || !unit(lambda_d) || !unit(lambda_sub)) {
      fail(ErrorKind::Config, "decay coefficients must lie in [0,1]");
    }
    if (!(src_guidance >= 0.0) || !(tar_guidance >= 0.0)) fail(ErrorKind::Config, "guidance scales must be >= 0");
    if (!(eps_ortho > 0.0)) fail(ErrorKind::Config, "eps_ortho must be positive");
    if (guidance_reps < 1) fail(ErrorKind::Config, "guidance_reps must be >= 1");
  }
};

/// Source path Z_t^src = t*x1 + (1-t)*x_src.
inline LatentVector interpolate_source(const LatentVector& x_src, const LatentVector& x1, double t) {
  require_same_shape(x_src, x1, "interpolate_source");
  require_finite(x_src, "interpolate_source x_src");
  require_finite(x1, "interpolate_source x1");
  if (!(t >= 0.0 && t <= 1.0)) fail(ErrorKind::InvalidArgument, "interpolate_source: t outside [0,1]");
  LatentVector out = LatentVector::zeros_like(x_src);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t * x1[i] + (1.0 - t) * x_src[i];
  return out;
}

/// Target path Z_t^tar = Z_t^src + Z_t^edit - X^src.
inline LatentVector target_state(const LatentVector& z_src_t, const LatentVector& z_edit_t, const LatentVector& x_src) {
  require_same_shape(z_src_t, z_edit_t, "target_state");
  require_same_shape(z_src_t, x_src, "target_state");
  LatentVector out = z_src_t;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (z_src_t[i] + z_edit_t[i]) - x_src[i];
  return out;
}

/// One backward Forward-Euler step: z - dt*v.
inline LatentVector euler_step(const LatentVector& z, const LatentVector& v, double dt) {
  require_same_shape(z, v, "euler_step");
  if (!(dt > 0.0)) fail(ErrorKind::InvalidArgument, "euler_step: dt must be positive");
  LatentVector out = z;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = z[i] - dt * v[i];
  return out;
}

/// Editing velocity v(Z^tar, t, P^tar) - v(Z^src, t, P^src). Both queries go
/// to the backend as one batch.
inline LatentVector editing_velocity(const VelocityField& field, const LatentVector& z_tar_t,
                                     const LatentVector& z_src_t, double t, const std::string& p_tar,
                                     const std::string& p_src, const EditConfig& cfg) {
  require_same_shape(z_tar_t, z_src_t, "editing_velocity");
  const VelocityQuery queries[] = {
      {z_tar_t, t, p_tar, cfg.tar_guidance},
      {z_src_t, t, p_src, cfg.src_guidance},
  };
  std::vector<LatentVector> out;
  try {
    out = field.evaluate_batch(queries);
    if (out.size() != 2) fail(ErrorKind::MalformedResponse, "backend returned wrong number of results");
    validate_velocity(z_tar_t, out[0]);
    validate_velocity(z_src_t, out[1]);
  } catch (const Error& e) {
    throw e.with_context("editing_velocity(t=" + std::to_string(t) + ", target='" + p_tar + "', source='" + p_src +
                         "')");
  }
  return out[0] - out[1];
}

}  // namespace flowdc
