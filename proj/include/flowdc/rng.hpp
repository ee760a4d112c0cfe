// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "flowdc/latent.hpp"

namespace flowdc {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a run seed and a fixed label, so
/// that every random stream of a run (noise, resampling, jitter, rounds) is a
/// pure function of the single run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(seed ^ h) + index);
}

inline LatentVector gaussian_latent(const Shape& shape, std::uint64_t seed, double mean = 0.0, double stddev = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(mean, stddev);
  LatentVector out = LatentVector::zeros(shape);
  for (double& x : out.values()) x = normal(gen);
  return out;
}

}  // namespace flowdc
