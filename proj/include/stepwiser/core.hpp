#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace stepwiser {

// Binary step/verdict vocabulary shared by annotation, datasets, and judges.
enum class Label { Positive, Negative };

std::string to_string(Label label);
Label label_from_string(std::string_view text);

struct Problem {
  std::string id;
  std::string statement;
  std::string reference_answer;
};

struct Chunk {
  int index = 0;          // 0-based position within the trajectory
  std::string text;       // verbatim content
  int token_count = 0;    // approximate; never used for correctness
};

struct Trajectory {
  std::string problem_id;
  std::vector<Chunk> chunks;
  std::optional<std::string> final_answer;
  std::optional<int> outcome;  // in {0,1}, present only if extraction was attempted
};

// Normalization applied to both sides before answer comparison.
// Pure configuration: same input + config always yields the same verdict.
struct VerifierConfig {
  bool strip_whitespace = true;   // trim leading/trailing whitespace
  bool strip_wrappers = true;     // peel surrounding $...$ and {...} pairs
  bool case_fold = false;         // ASCII lowercase
};

enum class BoxedStatus {
  Found,       // content extracted
  Absent,      // no \boxed{ occurrence at all
  Unbalanced,  // last occurrence never closes; distinct from absence
};

struct BoxedExtraction {
  BoxedStatus status = BoxedStatus::Absent;
  std::string answer;  // valid only when status == Found

  bool found() const { return status == BoxedStatus::Found; }
};

// Returns the content of the last brace-balanced `\boxed{...}` in `text`.
// Braces are matched literally; the last occurrence wins when several appear.
BoxedExtraction extract_boxed(std::string_view text);

std::string normalize_answer(std::string_view answer, const VerifierConfig& config);

// 1 iff the normalized forms are equal. Throws DataError on empty reference.
int verify_answer(std::string_view extracted, std::string_view reference,
                  const VerifierConfig& config);

// extract_boxed + verify_answer; absent or unbalanced extraction scores 0.
int score_response(std::string_view response_text, std::string_view reference,
                   const VerifierConfig& config);

// Whitespace-delimited token approximation, used only for length metrics.
int approx_token_count(std::string_view text);

// JSON-lines record schemas (one record per line, UTF-8).
nlohmann::json to_json(const Problem& problem);
nlohmann::json to_json(const Chunk& chunk);
nlohmann::json to_json(const Trajectory& trajectory);
Problem problem_from_json(const nlohmann::json& j);
Chunk chunk_from_json(const nlohmann::json& j);
Trajectory trajectory_from_json(const nlohmann::json& j);

}  // namespace stepwiser
