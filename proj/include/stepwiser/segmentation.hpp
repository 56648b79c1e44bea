#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stepwiser/core.hpp"
#include "stepwiser/provider.hpp"

namespace stepwiser {

struct SegmentedResponse {
  std::string raw;                   // original tagged text
  std::vector<std::string> chunks;   // verbatim chunk bodies
};

struct ParseDiagnostic {
  std::string message;
  std::size_t position = 0;  // byte offset of the violation
};

// Result of parsing `<chunk>...</chunk>` markup. Violations (text outside
// tags, unclosed tags, nested tags) are expected flow during SFT-data
// filtering, so they come back as a diagnostic rather than an exception.
struct ParseResult {
  std::optional<SegmentedResponse> response;
  ParseDiagnostic diagnostic;

  bool ok() const { return response.has_value(); }
};

ParseResult parse_chunks(std::string_view tagged_text);

// True iff concatenating the chunk bodies reproduces `original` byte-exactly.
bool verify_reconstruction(std::span<const std::string> chunks, std::string_view original);

// Baseline splitter: runs of two or more newlines delimit chunks; empty
// segments are dropped.
std::vector<std::string> split_double_newline(std::string_view text);

// Wraps each chunk in tags and concatenates; inverse of parse_chunks for
// chunk lists free of tag substrings.
std::string render_tagged(std::span<const std::string> chunks);

struct SegSftConfig {
  int num_responses = 16;
  int keep_correct = 4;
  int num_segmentations = 8;
};

struct SegSftRecord {
  std::string problem_id;
  std::string statement;
  std::string segmented_text;
  std::vector<std::string> chunks;
};

struct SegSftResult {
  std::vector<SegSftRecord> records;
  std::vector<std::string> completed_problem_ids;   // partial-progress manifest
  std::optional<std::string> transport_error;       // set when the run aborted
};

// Samples responses per problem, keeps up to keep_correct verified-correct
// ones (by sample index), asks the segmenter for num_segmentations taggings
// each, and retains only segmentations that parse and reconstruct perfectly.
// Transport errors propagate after recording per-problem progress.
SegSftResult build_segmentation_sft(std::span<const Problem> problems, Generator& generator,
                                    Generator& segmenter, const SegSftConfig& config,
                                    const VerifierConfig& verifier, std::uint64_t run_seed,
                                    std::span<const std::string> already_completed = {});

nlohmann::json to_json(const SegSftRecord& record);
SegSftRecord seg_sft_record_from_json(const nlohmann::json& j);

struct CorpusStats {
  double avg_steps = 0.0;
  double avg_tokens = 0.0;
};

CorpusStats corpus_stats(std::span<const Trajectory> trajectories);

}  // namespace stepwiser
