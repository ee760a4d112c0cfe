// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowdc/error.hpp"

namespace flowdc {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

/// Flat array of doubles with an explicit shape. Used for every latent state,
/// velocity, displacement and basis vector in the engine.
///
/// Construction validates that the shape product matches the data length and
/// that every dimension is positive. Finiteness is checked separately with
/// `require_finite` at API boundaries, since intermediate arithmetic is free
/// to produce large values.
class LatentVector {
 public:
  LatentVector() = default;

  explicit LatentVector(std::vector<double> data) : shape_{data.size()}, data_(std::move(data)) {
    if (data_.empty()) fail(ErrorKind::InvalidArgument, "latent vector must not be empty");
  }

  LatentVector(std::vector<double> data, Shape shape) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty()) fail(ErrorKind::InvalidArgument, "latent shape must have at least one dimension");
    for (auto d : shape_) {
      if (d == 0) fail(ErrorKind::InvalidArgument, "latent shape dimensions must be positive");
    }
    if (shape_size(shape_) != data_.size()) {
      fail(ErrorKind::ShapeMismatch, "shape " + shape_string(shape_) + " does not match data length " +
                                         std::to_string(data_.size()));
    }
  }

  static LatentVector zeros(const Shape& shape) { return LatentVector(std::vector<double>(shape_size(shape), 0.0), shape); }
  static LatentVector zeros_like(const LatentVector& v) { return zeros(v.shape()); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  bool all_finite() const noexcept {
    for (double x : data_) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }

  friend bool operator==(const LatentVector&, const LatentVector&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

inline void require_same_shape(const LatentVector& a, const LatentVector& b, const char* what) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::ShapeMismatch,
         std::string(what) + ": shape " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

inline void require_finite(const LatentVector& v, const char* what) {
  if (!v.all_finite()) fail(ErrorKind::NonFinite, std::string(what) + ": non-finite entry");
}

inline double dot(const LatentVector& a, const LatentVector& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double squared_norm(const LatentVector& v) {
  double acc = 0.0;
  for (double x : v.values()) acc += x * x;
  return acc;
}

inline double norm(const LatentVector& v) { return std::sqrt(squared_norm(v)); }

inline LatentVector operator+(const LatentVector& a, const LatentVector& b) {
  require_same_shape(a, b, "add");
  LatentVector out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

inline LatentVector operator-(const LatentVector& a, const LatentVector& b) {
  require_same_shape(a, b, "subtract");
  LatentVector out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

inline LatentVector operator*(double s, const LatentVector& v) {
  LatentVector out = v;
  for (double& x : out.values()) x *= s;
  return out;
}

inline LatentVector operator-(const LatentVector& v) { return -1.0 * v; }

/// y += alpha * x
inline void axpy(double alpha, const LatentVector& x, LatentVector& y) {
  require_same_shape(x, y, "axpy");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline double cosine(const LatentVector& a, const LatentVector& b) {
  const double denom = norm(a) * norm(b);
  return denom == 0.0 ? 0.0 : dot(a, b) / denom;
}

}  // namespace flowdc
