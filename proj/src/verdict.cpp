#include "stepwiser/verdict.hpp"

#include <algorithm>
#include <cctype>

#include "stepwiser/errors.hpp"

namespace stepwiser {

std::string to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::Ok: return "ok";
    case ParseStatus::MissingBox: return "missing_box";
    case ParseStatus::Malformed: return "malformed";
  }
  return "malformed";
}

namespace {

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::optional<Label> vocabulary_match(std::string_view content) {
  std::string_view s = trim(content);
  static constexpr std::string_view kTextWrapper = "\\text{";
  if (s.size() > kTextWrapper.size() + 1 && s.substr(0, kTextWrapper.size()) == kTextWrapper &&
      s.back() == '}') {
    s = trim(s.substr(kTextWrapper.size(), s.size() - kTextWrapper.size() - 1));
  }
  std::string folded(s);
  std::transform(folded.begin(), folded.end(), folded.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (folded == "positive") return Label::Positive;
  if (folded == "negative") return Label::Negative;
  return std::nullopt;
}

}  // namespace

JudgeVerdict parse_verdict(std::string_view judge_output) {
  static constexpr std::string_view kMarker = "\\boxed{";
  bool any_box = false;
  std::optional<Label> last_match;
  std::size_t last_match_start = 0;

  std::size_t pos = 0;
  while (true) {
    const std::size_t at = judge_output.find(kMarker, pos);
    if (at == std::string_view::npos) break;
    any_box = true;
    const std::size_t start = at + kMarker.size();
    int depth = 1;
    std::size_t end = std::string_view::npos;
    for (std::size_t i = start; i < judge_output.size(); ++i) {
      if (judge_output[i] == '{') ++depth;
      if (judge_output[i] == '}' && --depth == 0) {
        end = i;
        break;
      }
    }
    if (end != std::string_view::npos) {
      if (auto label = vocabulary_match(judge_output.substr(start, end - start))) {
        last_match = label;
        last_match_start = at;
      }
    }
    pos = at + kMarker.size();
  }

  JudgeVerdict verdict;
  if (last_match) {
    verdict.verdict = last_match;
    verdict.parse_status = ParseStatus::Ok;
    verdict.rationale = std::string(judge_output.substr(0, last_match_start));
  } else {
    verdict.parse_status = any_box ? ParseStatus::Malformed : ParseStatus::MissingBox;
    verdict.rationale = std::string(judge_output);
  }
  return verdict;
}

double reward(const JudgeVerdict& verdict, Label gold, const RewardConfig& config) {
  if (config.penalty > 0.0) throw ConfigError("format penalty must be <= 0");
  if (!verdict.ok()) {
    return config.mode == RewardConfig::Mode::FormatPenalty ? config.penalty : 0.0;
  }
  return *verdict.verdict == gold ? 1.0 : 0.0;
}

MajorityResult majority_vote(std::span<const JudgeVerdict> verdicts) {
  MajorityResult result;
  for (const JudgeVerdict& v : verdicts) {
    if (!v.ok()) continue;
    if (*v.verdict == Label::Positive) {
      ++result.positives;
    } else {
      ++result.negatives;
    }
  }
  if (result.positives + result.negatives == 0) {
    result.all_failed = true;
    result.verdict = Label::Negative;
    return result;
  }
  // Ties go Negative: rejecting is recoverable, accepting an error is not.
  result.verdict = result.positives > result.negatives ? Label::Positive : Label::Negative;
  return result;
}

}  // namespace stepwiser
