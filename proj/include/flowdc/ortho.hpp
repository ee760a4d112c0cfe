// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowdc/latent.hpp"

namespace flowdc {

/// Ordered, pairwise-orthogonal (not normalized) vectors spanning a subspace.
///
/// `dropped` lists the input positions whose Gram-Schmidt residual fell below
/// `eps` times the input norm (or was exactly zero) and so contributed no
/// direction.
struct Basis {
  std::vector<LatentVector> vectors;
  std::vector<double> squared_norms;
  std::vector<std::size_t> dropped;
  double eps = 1e-8;

  std::size_t size() const noexcept { return vectors.size(); }
  bool empty() const noexcept { return vectors.empty(); }
};

/// v = v_sub + v_orth with v_sub in the span of a basis. Keeps the original
/// velocity so that an identity reconstruction can return it bit-for-bit.
struct VelocityDecomposition {
  LatentVector v;
  LatentVector v_sub;
  LatentVector v_orth;
};

/// Progressive vector orthogonalization: a single Gram-Schmidt sweep in input
/// order. Each u_i starts as V^i and has its projection onto every earlier
/// retained u_j removed, using the running residual (modified Gram-Schmidt
/// ordering).
inline Basis pvo(std::span<const LatentVector> inputs, double eps = 1e-8) {
  if (inputs.empty()) fail(ErrorKind::InvalidArgument, "pvo: empty input list");
  if (!(eps > 0.0)) fail(ErrorKind::InvalidArgument, "pvo: eps must be positive");
  for (const auto& v : inputs) require_same_shape(inputs.front(), v, "pvo");

  Basis basis;
  basis.eps = eps;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    LatentVector u = inputs[i];
    for (std::size_t j = 0; j < basis.vectors.size(); ++j) {
      const double coeff = dot(u, basis.vectors[j]) / basis.squared_norms[j];
      axpy(-coeff, basis.vectors[j], u);
    }
    const double residual_sq = squared_norm(u);
    const double input_norm = norm(inputs[i]);
    if (residual_sq == 0.0 || std::sqrt(residual_sq) < eps * input_norm) {
      basis.dropped.push_back(i);
      continue;
    }
    basis.vectors.push_back(std::move(u));
    basis.squared_norms.push_back(residual_sq);
  }
  return basis;
}

inline Basis pvo(std::initializer_list<LatentVector> inputs, double eps = 1e-8) {
  return pvo(std::span<const LatentVector>(inputs.begin(), inputs.size()), eps);
}

/// Orthogonal projection sum_j <v,u_j>/|u_j|^2 u_j. An empty basis projects
/// everything to zero.
inline LatentVector project(const LatentVector& v, const Basis& basis) {
  LatentVector out = LatentVector::zeros_like(v);
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const double coeff = dot(v, basis.vectors[j]) / basis.squared_norms[j];
    axpy(coeff, basis.vectors[j], out);
  }
  return out;
}

inline VelocityDecomposition decompose(const LatentVector& v, const Basis& basis) {
  LatentVector v_sub = project(v, basis);
  LatentVector v_orth = v - v_sub;
  return {v, std::move(v_sub), std::move(v_orth)};
}

}  // namespace flowdc
