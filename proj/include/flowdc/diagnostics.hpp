// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <charconv>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "flowdc/trace.hpp"

namespace flowdc {

/// Cosine similarity of consecutive displacement steps along the main
/// trajectory. A pair with a zero-length step yields nullopt.
inline std::vector<std::optional<double>> consecutive_cosine(const RunTrace& trace) {
  const auto chain = trace.main_chain();
  if (chain.size() < 2) fail(ErrorKind::InvalidArgument, "consecutive_cosine: trace needs at least two steps");
  std::vector<std::optional<double>> out;
  out.reserve(chain.size() - 1);
  for (std::size_t j = 1; j < chain.size(); ++j) {
    const double a = chain[j - 1]->step_norm;
    const double b = chain[j]->step_norm;
    if (a == 0.0 || b == 0.0 || !chain[j]->dot_prev) {
      out.push_back(std::nullopt);
      continue;
    }
    out.push_back(std::clamp(*chain[j]->dot_prev / (a * b), -1.0, 1.0));
  }
  return out;
}

/// Sum of step lengths |Z_{t_{k-1}} - Z_{t_k}| along the main trajectory.
inline double transport_cost(const RunTrace& trace) {
  const auto chain = trace.main_chain();
  if (chain.empty()) fail(ErrorKind::InvalidArgument, "transport_cost: empty trace");
  double total = 0.0;
  for (const auto* r : chain) total += r->step_norm;
  return total;
}

struct DiagnosticsRow {
  int step = 0;
  double t = 0.0;
  int phase = 0;
  int round = 0;
  std::optional<double> cos_prev;
  double transport = 0.0;  // cumulative
  std::optional<double> v_sub_norm;
  std::optional<double> v_orth_norm;
  std::optional<double> lambda_orth;
};

/// Per-step diagnostics of the main trajectory; one row per executed step.
struct DiagnosticsReport {
  std::string method;
  std::vector<DiagnosticsRow> rows;

  double transport_cost() const { return rows.empty() ? 0.0 : rows.back().transport; }
};

inline DiagnosticsReport make_diagnostics(const RunTrace& trace) {
  DiagnosticsReport report{trace.method, {}};
  const auto chain = trace.main_chain();
  if (chain.empty()) return report;
  std::vector<std::optional<double>> cos;
  if (chain.size() >= 2) cos = consecutive_cosine(trace);
  double cumulative = 0.0;
  for (std::size_t j = 0; j < chain.size(); ++j) {
    const auto& r = *chain[j];
    cumulative += r.step_norm;
    report.rows.push_back({r.step, r.t, r.phase, r.round, j == 0 ? std::nullopt : cos[j - 1], cumulative, r.v_sub_norm,
                           r.v_orth_norm, r.lambda_orth});
  }
  return report;
}

/// Shortest decimal form that round-trips to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

inline void write_diagnostics_csv(std::ostream& os, const DiagnosticsReport& report) {
  auto opt = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
  os << "step,t,phase,round,cos_prev,transport_cost,v_sub_norm,v_orth_norm,lambda_orth,method\n";
  for (const auto& r : report.rows) {
    os << r.step << ',' << format_double(r.t) << ',' << r.phase << ',' << r.round << ',' << opt(r.cos_prev) << ','
       << format_double(r.transport) << ',' << opt(r.v_sub_norm) << ',' << opt(r.v_orth_norm) << ','
       << opt(r.lambda_orth) << ',' << report.method << '\n';
  }
}

}  // namespace flowdc
