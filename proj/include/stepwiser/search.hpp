#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stepwiser/core.hpp"
#include "stepwiser/judge.hpp"
#include "stepwiser/provider.hpp"

namespace stepwiser {

struct SearchConfig {
  int max_retries = 5;   // regenerations after the first rejection, per position
  int max_chunks = 32;
  int maj_k = 1;         // judge ballots per chunk
};

// Emits the next reasoning chunk given the accepted prefix. `attempt` is the
// retry ordinal at this position, so regenerations draw fresh seeds.
class ChunkPolicy {
 public:
  virtual ~ChunkPolicy() = default;
  virtual Chunk next_chunk(const Problem& problem, std::span<const Chunk> prefix, int position,
                           int attempt) = 0;
};

// Chunkwise sampling through the generation interface: stop at the blank-line
// chunk boundary, one chunk per call.
class GeneratorChunkPolicy : public ChunkPolicy {
 public:
  GeneratorChunkPolicy(Generator& generator, std::uint64_t seed, double temperature = 1.0,
                       int max_tokens = 8192);

  Chunk next_chunk(const Problem& problem, std::span<const Chunk> prefix, int position,
                   int attempt) override;

 private:
  Generator& generator_;
  std::uint64_t seed_;
  double temperature_;
  int max_tokens_;
};

struct RejectedChunk {
  int position = 0;
  int attempt = 0;
  Chunk chunk;
};

struct SearchTrace {
  std::vector<Chunk> accepted;
  std::vector<RejectedChunk> rejected;
  long accepted_tokens = 0;
  long rejected_tokens = 0;
  int forced_accepts = 0;
  std::optional<std::string> final_answer;
  std::optional<int> outcome;
  bool aborted = false;  // transport failure; trace is partial
};

// Chunk-reset loop: generate, judge, accept on Positive, otherwise discard
// and regenerate from the same prefix up to max_retries times; when retries
// are exhausted the last attempt is force-accepted so the episode always
// terminates. Stops at a boxed final answer or max_chunks.
SearchTrace chunk_reset_search(const Problem& problem, ChunkPolicy& policy, Judge& judge,
                               const SearchConfig& config, const VerifierConfig& verifier);

// Stepwise rejection-sampling selection: among verified-correct candidates,
// picks the one with the highest mean chunk score (Positive=1, Negative=0,
// Maj@maj_k per chunk). Ties break to fewer chunks, then lower index.
std::optional<std::size_t> select_best_response(const Problem& problem,
                                                std::span<const Trajectory> candidates,
                                                Judge& judge, int maj_k = 1);

struct SearchMetrics {
  double accuracy = 0.0;  // over traces with verifiable outcomes
  double mean_accepted_tokens = 0.0;
  double mean_rejected_tokens = 0.0;
  double forced_accept_rate = 0.0;  // forced accepts per accepted chunk
};

SearchMetrics search_metrics(std::span<const SearchTrace> traces);

nlohmann::json to_json(const SearchTrace& trace);
SearchTrace search_trace_from_json(const nlohmann::json& j);

}  // namespace stepwiser
