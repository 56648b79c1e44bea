#include "stepwiser/search.hpp"

#include <algorithm>

#include "stepwiser/errors.hpp"
#include "stepwiser/prompts.hpp"
#include "stepwiser/rng.hpp"

namespace stepwiser {

GeneratorChunkPolicy::GeneratorChunkPolicy(Generator& generator, std::uint64_t seed,
                                           double temperature, int max_tokens)
    : generator_(generator), seed_(seed), temperature_(temperature), max_tokens_(max_tokens) {}

Chunk GeneratorChunkPolicy::next_chunk(const Problem& problem, std::span<const Chunk> prefix,
                                       int position, int attempt) {
  GenerationRequest request;
  request.messages.push_back(
      {Role::User, fill_placeholder(policy_prompt_template(), "problem", problem.statement)});
  if (!prefix.empty()) {
    std::string prefix_text;
    for (const Chunk& c : prefix) {
      if (!prefix_text.empty()) prefix_text += "\n\n";
      prefix_text += c.text;
    }
    request.messages.push_back({Role::Assistant, std::move(prefix_text)});
  }
  request.temperature = temperature_;
  request.max_tokens = max_tokens_;
  request.n = 1;
  request.stop = {"\n\n"};
  request.seed = derive_seed(seed_, {fnv1a64(problem.id), static_cast<std::uint64_t>(position),
                                     static_cast<std::uint64_t>(attempt)});
  const GenerationResponse response = generator_.generate(request);
  Chunk chunk;
  chunk.index = position;
  chunk.text = response.texts.at(0);
  chunk.token_count = response.token_counts.at(0);
  return chunk;
}

SearchTrace chunk_reset_search(const Problem& problem, ChunkPolicy& policy, Judge& judge,
                               const SearchConfig& config, const VerifierConfig& verifier) {
  if (config.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (config.max_chunks < 1) throw ConfigError("max_chunks must be >= 1");

  SearchTrace trace;
  try {
    while (static_cast<int>(trace.accepted.size()) < config.max_chunks) {
      const int position = static_cast<int>(trace.accepted.size());
      Chunk chunk;
      for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        chunk = policy.next_chunk(problem, trace.accepted, position, attempt);
        JudgeInput input;
        input.problem = problem.statement;
        for (const Chunk& c : trace.accepted) input.history.push_back(c.text);
        input.chunk = chunk.text;
        const MajorityResult verdict = majority_judge(judge, input, config.maj_k);
        if (verdict.verdict == Label::Positive) break;
        if (attempt == config.max_retries) {
          // Retry budget exhausted: keep the last attempt so the episode
          // makes progress and terminates.
          ++trace.forced_accepts;
          break;
        }
        trace.rejected.push_back({position, attempt, chunk});
        trace.rejected_tokens += chunk.token_count;
      }
      chunk.index = position;
      trace.accepted_tokens += chunk.token_count;
      trace.accepted.push_back(chunk);

      const BoxedExtraction boxed = extract_boxed(chunk.text);
      if (boxed.found()) {
        trace.final_answer = boxed.answer;
        if (!problem.reference_answer.empty()) {
          trace.outcome = verify_answer(boxed.answer, problem.reference_answer, verifier);
        }
        break;
      }
    }
  } catch (const TransportError&) {
    trace.aborted = true;
  }
  return trace;
}

std::optional<std::size_t> select_best_response(const Problem& problem,
                                                std::span<const Trajectory> candidates,
                                                Judge& judge, int maj_k) {
  std::optional<std::size_t> best;
  double best_score = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Trajectory& candidate = candidates[i];
    if (!candidate.outcome) {
      throw DataError("select_best_response: candidate without verified outcome");
    }
    if (candidate.chunks.empty()) {
      throw DataError("select_best_response: candidate without chunks");
    }
    if (*candidate.outcome != 1) continue;

    double sum = 0.0;
    JudgeInput input;
    input.problem = problem.statement;
    for (const Chunk& chunk : candidate.chunks) {
      input.chunk = chunk.text;
      const MajorityResult verdict = majority_judge(judge, input, maj_k);
      sum += verdict.verdict == Label::Positive ? 1.0 : 0.0;
      input.history.push_back(chunk.text);
    }
    const double mean = sum / static_cast<double>(candidate.chunks.size());

    bool better = false;
    if (!best) {
      better = true;
    } else if (mean > best_score) {
      better = true;
    } else if (mean == best_score) {
      const std::size_t best_len = candidates[*best].chunks.size();
      if (candidate.chunks.size() < best_len) better = true;
    }
    if (better) {
      best = i;
      best_score = mean;
    }
  }
  return best;
}

SearchMetrics search_metrics(std::span<const SearchTrace> traces) {
  if (traces.empty()) throw DataError("search_metrics: no traces");
  SearchMetrics metrics;
  std::size_t with_outcome = 0;
  std::size_t successes = 0;
  long accepted_chunks = 0;
  long forced = 0;
  for (const SearchTrace& trace : traces) {
    metrics.mean_accepted_tokens += static_cast<double>(trace.accepted_tokens);
    metrics.mean_rejected_tokens += static_cast<double>(trace.rejected_tokens);
    accepted_chunks += static_cast<long>(trace.accepted.size());
    forced += trace.forced_accepts;
    if (trace.outcome) {
      ++with_outcome;
      successes += static_cast<std::size_t>(*trace.outcome);
    }
  }
  metrics.mean_accepted_tokens /= static_cast<double>(traces.size());
  metrics.mean_rejected_tokens /= static_cast<double>(traces.size());
  if (with_outcome > 0) {
    metrics.accuracy = static_cast<double>(successes) / static_cast<double>(with_outcome);
  }
  if (accepted_chunks > 0) {
    metrics.forced_accept_rate = static_cast<double>(forced) / static_cast<double>(accepted_chunks);
  }
  return metrics;
}

nlohmann::json to_json(const SearchTrace& trace) {
  nlohmann::json accepted = nlohmann::json::array();
  for (const Chunk& c : trace.accepted) accepted.push_back(to_json(c));
  nlohmann::json rejected = nlohmann::json::array();
  for (const RejectedChunk& r : trace.rejected) {
    rejected.push_back(
        {{"position", r.position}, {"attempt", r.attempt}, {"chunk", to_json(r.chunk)}});
  }
  nlohmann::json j{{"accepted", accepted},
                   {"rejected", rejected},
                   {"accepted_tokens", trace.accepted_tokens},
                   {"rejected_tokens", trace.rejected_tokens},
                   {"forced_accepts", trace.forced_accepts},
                   {"aborted", trace.aborted}};
  if (trace.final_answer) j["final_answer"] = *trace.final_answer;
  if (trace.outcome) j["outcome"] = *trace.outcome;
  return j;
}

SearchTrace search_trace_from_json(const nlohmann::json& j) {
  SearchTrace trace;
  for (const auto& cj : j.at("accepted")) trace.accepted.push_back(chunk_from_json(cj));
  for (const auto& rj : j.at("rejected")) {
    RejectedChunk r;
    r.position = rj.at("position").get<int>();
    r.attempt = rj.at("attempt").get<int>();
    r.chunk = chunk_from_json(rj.at("chunk"));
    trace.rejected.push_back(std::move(r));
  }
  trace.accepted_tokens = j.at("accepted_tokens").get<long>();
  trace.rejected_tokens = j.at("rejected_tokens").get<long>();
  trace.forced_accepts = j.at("forced_accepts").get<int>();
  trace.aborted = j.value("aborted", false);
  if (j.contains("final_answer")) trace.final_answer = j["final_answer"].get<std::string>();
  if (j.contains("outcome")) trace.outcome = j["outcome"].get<int>();
  return trace;
}

}  // namespace stepwiser
