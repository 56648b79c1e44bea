#pragma once

#include <optional>
#include <span>
#include <string>

#include "stepwiser/core.hpp"

namespace stepwiser {

enum class ParseStatus { Ok, MissingBox, Malformed };

std::string to_string(ParseStatus status);

struct JudgeVerdict {
  std::optional<Label> verdict;  // present iff parse_status == Ok
  std::string rationale;         // text preceding the verdict box
  ParseStatus parse_status = ParseStatus::MissingBox;

  bool ok() const { return parse_status == ParseStatus::Ok; }
};

// The last boxed occurrence whose content matches the verdict vocabulary
// decides. Matching strips an optional \text{...} wrapper, trims, and
// case-folds, since judge outputs mix both boxed spellings.
JudgeVerdict parse_verdict(std::string_view judge_output);

struct RewardConfig {
  enum class Mode { Standard, FormatPenalty };
  Mode mode = Mode::Standard;
  double penalty = -1.0;  // applied to parse failures in FormatPenalty mode
};

// 1 for a parsed verdict that matches gold, 0 for a mismatch; parse failures
// score 0 in standard mode and the penalty in format-penalty mode.
double reward(const JudgeVerdict& verdict, Label gold, const RewardConfig& config);

struct MajorityResult {
  Label verdict = Label::Negative;
  bool all_failed = false;  // no parseable ballot; verdict forced Negative
  int positives = 0;
  int negatives = 0;
};

// Strict majority over parseable ballots; ties resolve to Negative.
MajorityResult majority_vote(std::span<const JudgeVerdict> verdicts);

}  // namespace stepwiser
