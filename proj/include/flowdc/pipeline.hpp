// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowdc/core_flow.hpp"
#include "flowdc/decay.hpp"
#include "flowdc/field.hpp"
#include "flowdc/ortho.hpp"
#include "flowdc/prompts.hpp"
#include "flowdc/rng.hpp"
#include "flowdc/trace.hpp"

namespace flowdc {

struct RunOptions {
  bool snapshots = false;
};

/// Noise X_1 shared by every trajectory of a run. One draw per run unless the
/// config asks for per-step resampling.
class NoiseSource {
 public:
  NoiseSource(const Shape& shape, const EditConfig& cfg)
      : shape_(shape), seed_(cfg.seed), resample_(cfg.resample_noise),
        fixed_(gaussian_latent(shape, derive_seed(cfg.seed, "noise"))) {}

  const LatentVector& fixed() const noexcept { return fixed_; }

  LatentVector at_step(int k) const {
    return resample_ ? gaussian_latent(shape_, derive_seed(seed_, "noise/step", static_cast<std::uint64_t>(k))) : fixed_;
  }

  LatentVector for_guidance_rep(int rep) const {
    return resample_ ? gaussian_latent(shape_, derive_seed(seed_, "noise/guidance", static_cast<std::uint64_t>(rep)))
                     : fixed_;
  }

 private:
  Shape shape_;
  std::uint64_t seed_;
  bool resample_;
  LatentVector fixed_;
};

/// Per-trajectory edit states Z^i_t sharing one source path.
struct TrajectoryState {
  std::vector<LatentVector> z;
  LatentVector x1;
  LatentVector x_src;
  int k = 0;

  static TrajectoryState start(const LatentVector& x_src, const LatentVector& x1, std::size_t n, int k) {
    return {std::vector<LatentVector>(n, x_src), x1, x_src, k};
  }

  void validate(std::size_t n) const {
    if (z.size() != n) fail(ErrorKind::InvalidArgument, "trajectory state has wrong trajectory count");
    require_same_shape(x_src, x1, "trajectory state noise");
    for (const auto& zi : z) require_same_shape(x_src, zi, "trajectory state");
  }

  std::vector<LatentVector> displacements() const {
    std::vector<LatentVector> out;
    out.reserve(z.size());
    for (const auto& zi : z) out.push_back(zi - x_src);
    return out;
  }
};

/// Parallel velocity generation: one shared source evaluation and n target
/// evaluations, v^i = v(Z^{tar_i}_t, t, P^{tar_i}) - v(Z^src_t, t, P^src).
inline std::vector<LatentVector> pvg(const VelocityField& field, const PromptSet& prompts, const TrajectoryState& st,
                                     double t, const EditConfig& cfg) {
  const std::size_t n = prompts.count();
  st.validate(n);
  const LatentVector z_src = interpolate_source(st.x_src, st.x1, t);

  LatentVector v_src;
  try {
    v_src = field.evaluate(z_src, t, prompts.p_src, cfg.src_guidance);
    validate_velocity(z_src, v_src);
  } catch (const Error& e) {
    throw e.with_context("pvg source query (t=" + std::to_string(t) + ")");
  }

  std::vector<LatentVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LatentVector z_tar = target_state(z_src, st.z[i], st.x_src);
    try {
      LatentVector v_tar = field.evaluate(z_tar, t, prompts.intermediates[i], cfg.tar_guidance);
      validate_velocity(z_tar, v_tar);
      out.push_back(v_tar - v_src);
    } catch (const Error& e) {
      throw e.with_context("pvg trajectory " + std::to_string(i) + " (t=" + std::to_string(t) + ")");
    }
  }
  return out;
}

/// Mean of `cfg.guidance_reps` PVG evaluations at t_g, accumulated in
/// repetition order.
inline std::vector<LatentVector> guidance_velocities(const VelocityField& field, const PromptSet& prompts,
                                                     const TrajectoryState& st, const EditConfig& cfg,
                                                     const NoiseSource* noise = nullptr) {
  if (cfg.guidance_reps < 1) fail(ErrorKind::Config, "guidance_reps must be >= 1");
  const double t_g = cfg.t_g;
  std::vector<LatentVector> sum;
  for (int rep = 0; rep < cfg.guidance_reps; ++rep) {
    TrajectoryState rep_state = st;
    if (noise) rep_state.x1 = noise->for_guidance_rep(rep);
    auto vs = pvg(field, prompts, rep_state, t_g, cfg);
    if (sum.empty()) {
      sum = std::move(vs);
    } else {
      for (std::size_t i = 0; i < sum.size(); ++i) axpy(1.0, vs[i], sum[i]);
    }
  }
  const double inv = 1.0 / cfg.guidance_reps;
  if (cfg.guidance_reps > 1) {
    for (auto& v : sum) v = inv * v;
  }
  return sum;
}

/// Time-varying subspace U(t): PVO of the guidance velocities at t1, PVO of
/// the displacements on [t_o, t1), and the last displacement alone below t_o.
inline Basis subspace(double t, const EditConfig& cfg, std::span<const LatentVector> displacements,
                      std::span<const LatentVector> guidance_vs) {
  const TimeGrid grid = cfg.grid();
  const int k = grid.index_of(t, "subspace t");
  const int k1 = cfg.k1();
  const int ko = cfg.k_o();
  if (k > k1) fail(ErrorKind::InvalidArgument, "subspace: t above t1");
  if (k == k1) {
    if (guidance_vs.empty()) fail(ErrorKind::InvalidArgument, "subspace: guidance velocities required at t1");
    return pvo(guidance_vs, cfg.eps_ortho);
  }
  if (displacements.empty()) fail(ErrorKind::InvalidArgument, "subspace: displacements required below t1");
  if (k >= ko) return pvo(displacements, cfg.eps_ortho);
  return pvo(displacements.last(1), cfg.eps_ortho);
}

namespace detail {

/// Tracks the main trajectory's previous step for `dot_prev`.
struct MainChain {
  std::optional<LatentVector> prev_step;

  void record(TraceRecord& rec, const LatentVector& step) {
    rec.step_norm = norm(step);
    if (prev_step) rec.dot_prev = dot(*prev_step, step);
    prev_step = step;
  }
};

inline void fill_decomposition(TraceRecord& rec, const Basis& basis, const VelocityDecomposition& dec, double lo,
                               const LatentVector& v_prime) {
  rec.basis_size = static_cast<int>(basis.size());
  rec.dropped = static_cast<int>(basis.dropped.size());
  rec.v_norm = norm(dec.v);
  rec.v_sub_norm = norm(dec.v_sub);
  rec.v_orth_norm = norm(dec.v_orth);
  rec.lambda_orth = lo;
  rec.v_prime_norm = norm(v_prime);
}

inline std::string step_context(const char* method, int k, double t) {
  return std::string(method) + " step k=" + std::to_string(k) + " (t=" + std::to_string(t) + ")";
}

/// Single-trajectory editing loop from grid index `k_start` down to 1.
/// `decay` enables decomposition against {Z - X^src}; otherwise v' = v.
inline LatentVector flowedit_loop(const VelocityField& field, const LatentVector& x_src, const std::string& p_src,
                                  const std::string& p_tar, const EditConfig& cfg, const NoiseSource& noise,
                                  LatentVector z, int k_start, bool decay, int phase, int round, RunTrace& trace,
                                  MainChain& chain, const RunOptions& opts) {
  const TimeGrid grid = cfg.grid();
  const double dt = grid.delta();
  const DecaySchedule schedule = DecaySchedule::from(cfg);
  for (int k = k_start; k >= 1; --k) {
    const double t = grid.time(k);
    try {
      const LatentVector x1 = noise.at_step(k);
      const LatentVector z_src = interpolate_source(x_src, x1, t);
      const LatentVector z_tar = target_state(z_src, z, x_src);
      const LatentVector v = editing_velocity(field, z_tar, z_src, t, p_tar, p_src, cfg);

      TraceRecord rec;
      rec.step = k;
      rec.t = t;
      rec.phase = phase;
      rec.round = round;
      LatentVector v_prime;
      if (decay) {
        const Basis basis = pvo({z - x_src}, cfg.eps_ortho);
        const auto dec = decompose(v, basis);
        const double lo = lambda_orth(t, schedule);
        v_prime = reconstruct(dec, t, schedule);
        rec.basis_source = BasisSource::Single;
        fill_decomposition(rec, basis, dec, lo, v_prime);
      } else {
        v_prime = v;
        rec.v_norm = norm(v);
        rec.v_prime_norm = rec.v_norm;
      }
      LatentVector next = euler_step(z, v_prime, dt);
      chain.record(rec, next - z);
      z = std::move(next);
      if (opts.snapshots) rec.snapshot = z;
      trace.records.push_back(std::move(rec));
    } catch (const Error& e) {
      throw e.with_context(step_context(trace.method.c_str(), k, t));
    }
  }
  return z;
}

}  // namespace detail

/// Decoupled complex editing.
///
/// Phase 1 (t1 down to t_o, inclusive) evolves one trajectory per
/// intermediate prompt. Trajectory i projects its velocity onto PVO of the
/// first i guidance velocities at t1, or of the first i displacements
/// afterwards, decays the orthogonal remainder and takes an Euler step.
/// Phase 2 (below t_o) continues the last trajectory alone against its own
/// displacement. With `cfg.pso` off only phase 2 runs, starting at t1.
inline RunResult run_flowdc(const VelocityField& field, const PromptSet& prompts, const LatentVector& x_src,
                            const EditConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  prompts.validate();
  require_finite(x_src, "x_src");

  const TimeGrid grid = cfg.grid();
  const double dt = grid.delta();
  const int k1 = cfg.k1();
  const int ko = cfg.k_o();
  const DecaySchedule schedule = DecaySchedule::from(cfg);
  const NoiseSource noise(x_src.shape(), cfg);

  RunResult result;
  result.trace.method = "flowdc";
  detail::MainChain chain;

  if (!cfg.pso) {
    result.endpoint = detail::flowedit_loop(field, x_src, prompts.p_src, prompts.p_tar, cfg, noise, x_src, k1, true, 2,
                                            0, result.trace, chain, opts);
    return result;
  }

  const std::size_t n = prompts.count();
  TrajectoryState st = TrajectoryState::start(x_src, noise.fixed(), n, k1);

  std::vector<LatentVector> guidance_vs;
  try {
    guidance_vs = guidance_velocities(field, prompts, st, cfg, &noise);
  } catch (const Error& e) {
    throw e.with_context("guidance velocities");
  }

  for (int k = k1; k >= ko && k >= 1; --k) {
    const double t = grid.time(k);
    try {
      st.k = k;
      st.x1 = noise.at_step(k);
      const std::vector<LatentVector> vs = pvg(field, prompts, st, t, cfg);
      const std::vector<LatentVector> ds = st.displacements();
      const double lo = lambda_orth(t, schedule);

      for (std::size_t i = 0; i < n; ++i) {
        const auto prefix = std::span<const LatentVector>(k == k1 ? guidance_vs : ds).first(i + 1);
        const Basis basis = pvo(prefix, cfg.eps_ortho);
        const auto dec = decompose(vs[i], basis);
        const LatentVector v_prime = reconstruct(dec, t, schedule);

        TraceRecord rec;
        rec.step = k;
        rec.t = t;
        rec.phase = 1;
        rec.trajectory = static_cast<int>(i);
        rec.main = (i + 1 == n);
        rec.basis_source = k == k1 ? BasisSource::Guidance : BasisSource::Displacement;
        detail::fill_decomposition(rec, basis, dec, lo, v_prime);
        if (rec.main && k != k1) {
          rec.v_sub_single_norm = norm(project(vs[i], pvo({ds[i]}, cfg.eps_ortho)));
        }

        LatentVector next = euler_step(st.z[i], v_prime, dt);
        if (rec.main) {
          chain.record(rec, next - st.z[i]);
        } else {
          rec.step_norm = norm(next - st.z[i]);
        }
        st.z[i] = std::move(next);
        if (opts.snapshots) rec.snapshot = st.z[i];
        result.trace.records.push_back(std::move(rec));
      }
    } catch (const Error& e) {
      throw e.with_context(detail::step_context("flowdc", k, t));
    }
  }

  result.endpoint = detail::flowedit_loop(field, x_src, prompts.p_src, prompts.p_tar, cfg, noise, st.z[n - 1], ko - 1,
                                          true, 2, 0, result.trace, chain, opts);
  return result;
}

inline RunResult run_flowdc(const VelocityField& field, const PromptDecoupler& decoupler, const LatentVector& x_src,
                            const std::string& p_src, const std::string& p_tar, const EditConfig& cfg,
                            const RunOptions& opts = {}) {
  const PromptSet prompts =
      cfg.pso ? decouple_prompt(decoupler, p_src, p_tar) : decouple_prompt(SinglePromptDecoupler{}, p_src, p_tar);
  return run_flowdc(field, prompts, x_src, cfg, opts);
}

/// Inversion-free single-target editing with undecomposed velocities, from t1
/// down to 0.
inline RunResult run_flowedit(const VelocityField& field, const LatentVector& x_src, const std::string& p_src,
                              const std::string& p_tar, const EditConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  require_finite(x_src, "x_src");
  const NoiseSource noise(x_src.shape(), cfg);
  RunResult result;
  result.trace.method = "flowedit";
  detail::MainChain chain;
  result.endpoint =
      detail::flowedit_loop(field, x_src, p_src, p_tar, cfg, noise, x_src, cfg.k1(), false, 0, 0, result.trace, chain, opts);
  return result;
}

/// Multi-round baseline: one FlowEdit pass per editing target, each starting
/// from the previous round's output and targeting that round's single clause.
/// Round 0 uses the run seed; later rounds draw their noise from derived seeds.
inline RunResult run_multiround(const VelocityField& field, const LatentVector& x_src, const PromptSet& prompts,
                                const EditConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  prompts.validate();
  require_finite(x_src, "x_src");

  RunResult result;
  result.trace.method = "multiround";
  detail::MainChain chain;
  LatentVector z = x_src;
  for (std::size_t i = 0; i < prompts.count(); ++i) {
    EditConfig round_cfg = cfg;
    if (i > 0) round_cfg.seed = derive_seed(cfg.seed, "round", i);
    const NoiseSource noise(x_src.shape(), round_cfg);
    try {
      z = detail::flowedit_loop(field, z, prompts.p_src, prompts.clause(i), round_cfg, noise, z, cfg.k1(), false, 0,
                                static_cast<int>(i), result.trace, chain, opts);
    } catch (const Error& e) {
      throw e.with_context("round " + std::to_string(i));
    }
  }
  result.endpoint = std::move(z);
  return result;
}

}  // namespace flowdc
