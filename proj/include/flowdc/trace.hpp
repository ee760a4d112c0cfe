// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowdc/latent.hpp"

namespace flowdc {

enum class BasisSource {
  None,          // no decomposition (baselines)
  Guidance,      // PVO of guidance velocities at t1
  Displacement,  // PVO of trajectory displacements
  Single,        // the main trajectory's displacement alone
};

inline std::string_view to_string(BasisSource s) {
  switch (s) {
    case BasisSource::None: return "none";
    case BasisSource::Guidance: return "guidance";
    case BasisSource::Displacement: return "displacement";
    case BasisSource::Single: return "single";
  }
  return "none";
}

inline BasisSource basis_source_from(std::string_view s) {
  if (s == "guidance") return BasisSource::Guidance;
  if (s == "displacement") return BasisSource::Displacement;
  if (s == "single") return BasisSource::Single;
  return BasisSource::None;
}

/// One executed (step, trajectory) update Z_{t_k} -> Z_{t_{k-1}}.
///
/// Records flagged `main` form the chain of the trajectory that produces the
/// run's output; `dot_prev` is the inner product of this step's displacement
/// with the previous main step's displacement, which is all the diagnostics
/// need when full state snapshots are not kept.
struct TraceRecord {
  int step = 0;  // grid index k of t
  double t = 0.0;
  int phase = 0;
  int trajectory = 0;
  int round = 0;
  bool main = true;
  BasisSource basis_source = BasisSource::None;
  int basis_size = 0;
  int dropped = 0;
  double v_norm = 0.0;
  std::optional<double> v_sub_norm;
  std::optional<double> v_orth_norm;
  std::optional<double> lambda_orth;
  // Norm of the in-subspace part under {d^n} alone, for comparison with the
  // PVO basis on the main trajectory.
  std::optional<double> v_sub_single_norm;
  double v_prime_norm = 0.0;
  double step_norm = 0.0;
  std::optional<double> dot_prev;
  std::optional<LatentVector> snapshot;
};

struct RunTrace {
  std::string method;
  std::vector<TraceRecord> records;

  std::vector<const TraceRecord*> main_chain() const {
    std::vector<const TraceRecord*> out;
    for (const auto& r : records) {
      if (r.main) out.push_back(&r);
    }
    return out;
  }
};

struct RunResult {
  LatentVector endpoint;
  RunTrace trace;
};

}  // namespace flowdc
