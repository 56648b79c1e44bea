#include "stepwiser/core.hpp"

#include <algorithm>
#include <cctype>

#include "stepwiser/errors.hpp"

namespace stepwiser {

std::string to_string(Label label) {
  return label == Label::Positive ? "Positive" : "Negative";
}

Label label_from_string(std::string_view text) {
  if (text == "Positive") return Label::Positive;
  if (text == "Negative") return Label::Negative;
  throw DataError("unknown label: '" + std::string(text) + "'");
}

BoxedExtraction extract_boxed(std::string_view text) {
  static constexpr std::string_view kMarker = "\\boxed{";
  const std::size_t at = text.rfind(kMarker);
  if (at == std::string_view::npos) {
    return {BoxedStatus::Absent, ""};
  }
  const std::size_t start = at + kMarker.size();
  int depth = 1;
  for (std::size_t i = start; i < text.size(); ++i) {
    if (text[i] == '{') {
      ++depth;
    } else if (text[i] == '}') {
      --depth;
      if (depth == 0) {
        return {BoxedStatus::Found, std::string(text.substr(start, i - start))};
      }
    }
  }
  return {BoxedStatus::Unbalanced, ""};
}

namespace {

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// True iff the string is `{...}` with the opening brace matching the final one.
bool brace_wrapped(std::string_view s) {
  if (s.size() < 2 || s.front() != '{' || s.back() != '}') return false;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}') {
      --depth;
      if (depth == 0) return i == s.size() - 1;
    }
  }
  return false;
}

}  // namespace

std::string normalize_answer(std::string_view answer, const VerifierConfig& config) {
  std::string_view s = answer;
  if (config.strip_whitespace) s = trim(s);
  if (config.strip_wrappers) {
    bool stripped = true;
    while (stripped && s.size() >= 2) {
      stripped = false;
      if (s.front() == '$' && s.back() == '$') {
        s = s.substr(1, s.size() - 2);
        stripped = true;
      } else if (brace_wrapped(s)) {
        s = s.substr(1, s.size() - 2);
        stripped = true;
      }
      if (stripped && config.strip_whitespace) s = trim(s);
    }
  }
  std::string out(s);
  if (config.case_fold) {
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  }
  return out;
}

int verify_answer(std::string_view extracted, std::string_view reference,
                  const VerifierConfig& config) {
  if (reference.empty()) {
    throw DataError("verify_answer: reference answer is empty");
  }
  return normalize_answer(extracted, config) == normalize_answer(reference, config) ? 1 : 0;
}

int score_response(std::string_view response_text, std::string_view reference,
                   const VerifierConfig& config) {
  const BoxedExtraction boxed = extract_boxed(response_text);
  if (!boxed.found()) return 0;
  return verify_answer(boxed.answer, reference, config);
}

int approx_token_count(std::string_view text) {
  int count = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

nlohmann::json to_json(const Problem& problem) {
  return {{"id", problem.id},
          {"statement", problem.statement},
          {"reference_answer", problem.reference_answer}};
}

nlohmann::json to_json(const Chunk& chunk) {
  return {{"index", chunk.index}, {"text", chunk.text}, {"token_count", chunk.token_count}};
}

nlohmann::json to_json(const Trajectory& trajectory) {
  nlohmann::json j{{"problem_id", trajectory.problem_id}, {"chunks", nlohmann::json::array()}};
  for (const Chunk& c : trajectory.chunks) j["chunks"].push_back(to_json(c));
  if (trajectory.final_answer) j["final_answer"] = *trajectory.final_answer;
  if (trajectory.outcome) j["outcome"] = *trajectory.outcome;
  return j;
}

namespace {

const nlohmann::json& require_field(const nlohmann::json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) {
    throw DataError(std::string("missing field '") + name + "' in record: " + j.dump());
  }
  return *it;
}

}  // namespace

Problem problem_from_json(const nlohmann::json& j) {
  Problem p;
  p.id = require_field(j, "id").get<std::string>();
  p.statement = require_field(j, "statement").get<std::string>();
  p.reference_answer = require_field(j, "reference_answer").get<std::string>();
  if (p.id.empty()) throw DataError("problem id must be non-empty");
  if (p.statement.empty()) throw DataError("problem statement must be non-empty");
  return p;
}

Chunk chunk_from_json(const nlohmann::json& j) {
  Chunk c;
  c.index = require_field(j, "index").get<int>();
  c.text = require_field(j, "text").get<std::string>();
  c.token_count = require_field(j, "token_count").get<int>();
  if (c.token_count < 0) throw DataError("chunk token_count must be nonnegative");
  return c;
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory t;
  t.problem_id = require_field(j, "problem_id").get<std::string>();
  const nlohmann::json& chunks = require_field(j, "chunks");
  int expected_index = 0;
  for (const auto& cj : chunks) {
    Chunk c = chunk_from_json(cj);
    if (c.index != expected_index++) {
      throw DataError("trajectory chunk indices must be contiguous from 0 (problem_id=" +
                      t.problem_id + ")");
    }
    t.chunks.push_back(std::move(c));
  }
  if (t.chunks.empty()) {
    throw DataError("trajectory must have at least one chunk (problem_id=" + t.problem_id + ")");
  }
  if (j.contains("final_answer") && !j["final_answer"].is_null()) {
    t.final_answer = j["final_answer"].get<std::string>();
  }
  if (j.contains("outcome") && !j["outcome"].is_null()) {
    const int outcome = j["outcome"].get<int>();
    if (outcome != 0 && outcome != 1) throw DataError("trajectory outcome must be 0 or 1");
    t.outcome = outcome;
  }
  return t;
}

}  // namespace stepwiser
