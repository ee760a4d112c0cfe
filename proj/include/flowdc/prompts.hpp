// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "flowdc/error.hpp"

namespace flowdc {

inline constexpr std::string_view kClauseDelimiter = "; ";

/// Splits a complex prompt on "; ". An empty clause is an error.
inline std::vector<std::string> split_clauses(std::string_view prompt) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = prompt.find(kClauseDelimiter, start);
    const auto clause = prompt.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (clause.empty()) fail(ErrorKind::InvalidArgument, "empty clause in prompt '" + std::string(prompt) + "'");
    out.emplace_back(clause);
    if (pos == std::string_view::npos) break;
    start = pos + kClauseDelimiter.size();
  }
  return out;
}

inline std::string join_clauses(const std::vector<std::string>& clauses, std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i) out += kClauseDelimiter;
    out += clauses[i];
  }
  return out;
}

/// Source prompt, complex target prompt and the ordered cumulative
/// intermediate targets; intermediates.back() == p_tar.
///
/// `clauses` holds the individual (non-cumulative) editing targets when the
/// decoupler knows them. The multi-round baseline edits one clause per round.
struct PromptSet {
  std::string p_src;
  std::string p_tar;
  std::vector<std::string> intermediates;
  std::vector<std::string> clauses;

  std::size_t count() const noexcept { return intermediates.size(); }

  void validate() const {
    if (intermediates.empty()) fail(ErrorKind::InvalidArgument, "prompt set needs at least one intermediate target");
    if (intermediates.back() != p_tar) {
      fail(ErrorKind::InvalidArgument, "last intermediate prompt must equal the complex target prompt");
    }
    if (!clauses.empty() && clauses.size() != intermediates.size()) {
      fail(ErrorKind::InvalidArgument, "clause count must match intermediate count");
    }
  }

  /// The i-th single editing target. Falls back to stripping the previous
  /// cumulative prompt when no clause list was provided.
  std::string clause(std::size_t i) const {
    if (!clauses.empty()) return clauses.at(i);
    if (i == 0) return intermediates.at(0);
    const std::string& prev = intermediates.at(i - 1);
    const std::string& cur = intermediates.at(i);
    const std::string prefix = prev + std::string(kClauseDelimiter);
    if (cur.compare(0, prefix.size(), prefix) != 0) {
      fail(ErrorKind::InvalidArgument, "intermediate " + std::to_string(i) + " does not extend the previous prompt");
    }
    return cur.substr(prefix.size());
  }
};

/// Turns (p_src, p_tar) into ordered cumulative intermediate targets.
class PromptDecoupler {
 public:
  virtual ~PromptDecoupler() = default;
  virtual PromptSet decouple(const std::string& p_src, const std::string& p_tar) const = 0;
};

/// Deterministic decoupler: target i is the join of the first i clauses of
/// p_tar split on "; ".
class DelimiterDecoupler final : public PromptDecoupler {
 public:
  PromptSet decouple(const std::string& p_src, const std::string& p_tar) const override {
    if (p_tar.empty()) fail(ErrorKind::InvalidArgument, "target prompt must not be empty");
    PromptSet set{p_src, p_tar, {}, split_clauses(p_tar)};
    for (std::size_t i = 1; i <= set.clauses.size(); ++i) set.intermediates.push_back(join_clauses(set.clauses, i));
    return set;
  }
};

/// Treats the complex prompt as a single target (no decoupling).
class SinglePromptDecoupler final : public PromptDecoupler {
 public:
  PromptSet decouple(const std::string& p_src, const std::string& p_tar) const override {
    if (p_tar.empty()) fail(ErrorKind::InvalidArgument, "target prompt must not be empty");
    return {p_src, p_tar, {p_tar}, {p_tar}};
  }
};

inline PromptSet decouple_prompt(const PromptDecoupler& decoupler, const std::string& p_src, const std::string& p_tar) {
  PromptSet set = decoupler.decouple(p_src, p_tar);
  set.validate();
  return set;
}

}  // namespace flowdc
