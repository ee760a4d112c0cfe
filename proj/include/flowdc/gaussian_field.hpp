// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowdc/field.hpp"
#include "flowdc/prompts.hpp"
#include "flowdc/rng.hpp"

namespace flowdc {

/// Analytic text-conditioned data distribution used as a verification field.
///
/// Prompt P selects X_0 ~ N(mu_P, sigma_P^2 I) with
///   mu_P = base_mean + sum of the registered shifts of P's clauses.
/// A prompt registered verbatim uses its own entry; otherwise it is split on
/// "; " and every clause must be registered. Composite prompts use
/// `default_sigma`.
struct GaussianScenario {
  struct PromptEntry {
    std::vector<double> shift;
    std::optional<double> sigma;
  };

  std::size_t dim = 0;
  std::vector<double> base_mean;  // empty means zero
  double default_sigma = 1.0;
  std::map<std::string, PromptEntry> prompts;

  struct Resolved {
    std::vector<double> shift;
    double sigma;
  };

  void add_prompt(const std::string& prompt, std::vector<double> shift, std::optional<double> sigma = std::nullopt) {
    if (shift.size() != dim) fail(ErrorKind::ShapeMismatch, "prompt '" + prompt + "' shift has wrong length");
    if (sigma && !(*sigma > 0.0)) fail(ErrorKind::InvalidArgument, "prompt '" + prompt + "' sigma must be positive");
    prompts[prompt] = {std::move(shift), sigma};
  }

  bool has_prompt(const std::string& prompt) const {
    try {
      resolve(prompt);
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  Resolved resolve(const std::string& prompt) const {
    if (auto it = prompts.find(prompt); it != prompts.end()) {
      return {it->second.shift, it->second.sigma.value_or(default_sigma)};
    }
    std::vector<std::string> clauses;
    try {
      clauses = split_clauses(prompt);
    } catch (const Error&) {
      fail(ErrorKind::UnknownPrompt, "unregistered prompt '" + prompt + "'");
    }
    if (clauses.size() < 2) fail(ErrorKind::UnknownPrompt, "unregistered prompt '" + prompt + "'");
    Resolved out{std::vector<double>(dim, 0.0), default_sigma};
    for (const auto& clause : clauses) {
      auto it = prompts.find(clause);
      if (it == prompts.end()) fail(ErrorKind::UnknownPrompt, "unregistered clause '" + clause + "' in '" + prompt + "'");
      for (std::size_t i = 0; i < dim; ++i) out.shift[i] += it->second.shift[i];
    }
    return out;
  }

  double base(std::size_t i) const { return base_mean.empty() ? 0.0 : base_mean[i]; }

  /// mu_P with the shift scaled by `guidance`.
  std::vector<double> mean(const std::string& prompt, double guidance = 1.0) const {
    const auto r = resolve(prompt);
    std::vector<double> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = base(i) + guidance * r.shift[i];
    return out;
  }

  double sigma(const std::string& prompt) const { return resolve(prompt).sigma; }

  void validate() const {
    if (dim == 0) fail(ErrorKind::Config, "gaussian scenario dim must be positive");
    if (!base_mean.empty() && base_mean.size() != dim) fail(ErrorKind::Config, "base_mean has wrong length");
    if (!(default_sigma > 0.0)) fail(ErrorKind::Config, "sigma must be positive");
    for (const auto& [name, entry] : prompts) {
      if (entry.shift.size() != dim) fail(ErrorKind::Config, "prompt '" + name + "' shift has wrong length");
      if (entry.sigma && !(*entry.sigma > 0.0)) fail(ErrorKind::Config, "prompt '" + name + "' sigma must be positive");
    }
  }
};

/// Exact marginal velocity E[X_1 - X_0 | Z_t = z] of the straight
/// interpolation Z_t = t X_1 + (1-t) X_0, X_1 ~ N(0, I) independent of
/// X_0 ~ N(m, sigma^2 I) where m = base + guidance * shift.
///
/// Per coordinate (Z_t, X_1 - X_0) is jointly Gaussian with
///   E[Z_t] = (1-t) m,  Var[Z_t] = s^2 = t^2 + (1-t)^2 sigma^2,
///   Cov[X_1 - X_0, Z_t] = t - (1-t) sigma^2,
/// so v(z,t) = -m + (t - (1-t) sigma^2) / s^2 * (z - (1-t) m).
inline LatentVector gaussian_velocity(const GaussianScenario& scn, const LatentVector& z, double t,
                                      const std::string& prompt, double guidance) {
  if (z.size() != scn.dim) {
    fail(ErrorKind::ShapeMismatch, "latent has " + std::to_string(z.size()) + " entries, scenario dim is " +
                                       std::to_string(scn.dim));
  }
  if (!(t >= 0.0 && t <= 1.0)) fail(ErrorKind::InvalidArgument, "gaussian_velocity: t outside [0,1]");
  const auto resolved = scn.resolve(prompt);
  const double sigma2 = resolved.sigma * resolved.sigma;
  const double s2 = t * t + (1.0 - t) * (1.0 - t) * sigma2;
  if (!(s2 > 0.0)) fail(ErrorKind::InvalidArgument, "gaussian_velocity: degenerate conditional variance");
  const double gain = (t - (1.0 - t) * sigma2) / s2;

  LatentVector out = LatentVector::zeros_like(z);
  for (std::size_t i = 0; i < scn.dim; ++i) {
    const double m = scn.base(i) + guidance * resolved.shift[i];
    out[i] = -m + gain * (z[i] - (1.0 - t) * m);
  }
  return out;
}

/// Exact flow map of the field above from t=1 to t: the ODE keeps
/// (z - (1-t) m) / s(t) constant, so z(t) = (1-t) m + s(t) z(1).
inline LatentVector gaussian_flow_from_noise(const GaussianScenario& scn, const LatentVector& z1, double t,
                                             const std::string& prompt, double guidance = 1.0) {
  const auto resolved = scn.resolve(prompt);
  const double s = std::sqrt(t * t + (1.0 - t) * (1.0 - t) * resolved.sigma * resolved.sigma);
  LatentVector out = LatentVector::zeros_like(z1);
  for (std::size_t i = 0; i < scn.dim; ++i) {
    const double m = scn.base(i) + guidance * resolved.shift[i];
    out[i] = (1.0 - t) * m + s * z1[i];
  }
  return out;
}

/// Draws X ~ N(mu_P, sigma_P^2 I).
inline LatentVector sample_prompt(const GaussianScenario& scn, const std::string& prompt, std::uint64_t seed) {
  const auto mu = scn.mean(prompt);
  const double sigma = scn.sigma(prompt);
  LatentVector out = gaussian_latent({scn.dim}, seed);
  for (std::size_t i = 0; i < scn.dim; ++i) out[i] = mu[i] + sigma * out[i];
  return out;
}

class GaussianField final : public VelocityField {
 public:
  explicit GaussianField(GaussianScenario scenario) : scenario_(std::move(scenario)) { scenario_.validate(); }

  LatentVector evaluate(const LatentVector& z, double t, const std::string& prompt, double guidance) const override {
    return gaussian_velocity(scenario_, z, t, prompt, guidance);
  }

  const GaussianScenario& scenario() const noexcept { return scenario_; }

 private:
  GaussianScenario scenario_;
};

}  // namespace flowdc
