#include "stepwiser/segmentation.hpp"

#include <algorithm>
#include <cctype>

#include "stepwiser/errors.hpp"
#include "stepwiser/prompts.hpp"
#include "stepwiser/rng.hpp"

namespace stepwiser {

namespace {

constexpr std::string_view kOpenTag = "<chunk>";
constexpr std::string_view kCloseTag = "</chunk>";

ParseResult fail(std::string message, std::size_t position) {
  ParseResult r;
  r.diagnostic = {std::move(message), position};
  return r;
}

}  // namespace

ParseResult parse_chunks(std::string_view tagged_text) {
  SegmentedResponse response;
  response.raw = std::string(tagged_text);

  std::size_t pos = 0;
  while (pos < tagged_text.size()) {
    if (std::isspace(static_cast<unsigned char>(tagged_text[pos]))) {
      ++pos;
      continue;
    }
    if (tagged_text.substr(pos, kOpenTag.size()) != kOpenTag) {
      return fail("content outside <chunk> tags", pos);
    }
    const std::size_t body_start = pos + kOpenTag.size();
    const std::size_t next_open = tagged_text.find(kOpenTag, body_start);
    const std::size_t next_close = tagged_text.find(kCloseTag, body_start);
    if (next_close == std::string_view::npos) {
      return fail("unclosed <chunk> tag", pos);
    }
    if (next_open != std::string_view::npos && next_open < next_close) {
      return fail("nested <chunk> tag", next_open);
    }
    response.chunks.emplace_back(tagged_text.substr(body_start, next_close - body_start));
    pos = next_close + kCloseTag.size();
  }
  if (response.chunks.empty()) {
    return fail("no <chunk> tags found", 0);
  }
  ParseResult r;
  r.response = std::move(response);
  return r;
}

bool verify_reconstruction(std::span<const std::string> chunks, std::string_view original) {
  std::size_t total = 0;
  for (const std::string& c : chunks) total += c.size();
  if (total != original.size()) return false;
  std::size_t pos = 0;
  for (const std::string& c : chunks) {
    if (original.compare(pos, c.size(), c) != 0) return false;
    pos += c.size();
  }
  return true;
}

std::vector<std::string> split_double_newline(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t brk = pos;
    while (brk < text.size()) {
      if (text[brk] == '\n' && brk + 1 < text.size() && text[brk + 1] == '\n') break;
      ++brk;
    }
    std::string_view piece = text.substr(pos, brk - pos);
    if (!piece.empty()) out.emplace_back(piece);
    if (brk >= text.size()) break;
    pos = brk;
    while (pos < text.size() && text[pos] == '\n') ++pos;
  }
  return out;
}

std::string render_tagged(std::span<const std::string> chunks) {
  std::string out;
  for (const std::string& c : chunks) {
    out += kOpenTag;
    out += c;
    out += kCloseTag;
  }
  return out;
}

SegSftResult build_segmentation_sft(std::span<const Problem> problems, Generator& generator,
                                    Generator& segmenter, const SegSftConfig& config,
                                    const VerifierConfig& verifier, std::uint64_t run_seed,
                                    std::span<const std::string> already_completed) {
  if (config.num_responses < 1 || config.keep_correct < 1 || config.num_segmentations < 1) {
    throw ConfigError("segmentation-SFT config values must be positive");
  }
  if (config.keep_correct > config.num_responses) {
    throw ConfigError("keep_correct must not exceed num_responses");
  }

  SegSftResult result;
  result.completed_problem_ids.assign(already_completed.begin(), already_completed.end());

  for (const Problem& problem : problems) {
    if (std::find(result.completed_problem_ids.begin(), result.completed_problem_ids.end(),
                  problem.id) != result.completed_problem_ids.end()) {
      continue;
    }
    if (problem.reference_answer.empty()) {
      throw DataError("problem without reference answer: " + problem.id);
    }
    try {
      GenerationRequest gen_request;
      gen_request.messages = {{Role::User, problem.statement}};
      gen_request.n = config.num_responses;
      gen_request.seed = derive_seed(run_seed, {fnv1a64(problem.id), fnv1a64("responses")});
      const GenerationResponse responses = generator.generate(gen_request);

      std::vector<std::string> kept;
      for (const std::string& text : responses.texts) {
        if (static_cast<int>(kept.size()) >= config.keep_correct) break;
        if (score_response(text, problem.reference_answer, verifier) == 1) {
          kept.push_back(text);
        }
      }

      for (std::size_t r = 0; r < kept.size(); ++r) {
        GenerationRequest seg_request;
        seg_request.messages = {
            {Role::User,
             fill_placeholder(segmentation_prompt_template(), "solution", kept[r])}};
        seg_request.n = config.num_segmentations;
        seg_request.seed =
            derive_seed(run_seed, {fnv1a64(problem.id), fnv1a64("segmentations"), r});
        const GenerationResponse segmentations = segmenter.generate(seg_request);

        for (const std::string& tagged : segmentations.texts) {
          ParseResult parsed = parse_chunks(tagged);
          if (!parsed.ok()) continue;
          if (!verify_reconstruction(parsed.response->chunks, kept[r])) continue;
          SegSftRecord record;
          record.problem_id = problem.id;
          record.statement = problem.statement;
          record.segmented_text = tagged;
          record.chunks = parsed.response->chunks;
          result.records.push_back(std::move(record));
        }
      }
      result.completed_problem_ids.push_back(problem.id);
    } catch (const TransportError& e) {
      result.transport_error = e.what();
      return result;
    }
  }
  return result;
}

nlohmann::json to_json(const SegSftRecord& record) {
  return {{"problem_id", record.problem_id},
          {"statement", record.statement},
          {"segmented_text", record.segmented_text},
          {"chunks", record.chunks}};
}

SegSftRecord seg_sft_record_from_json(const nlohmann::json& j) {
  SegSftRecord r;
  r.problem_id = j.at("problem_id").get<std::string>();
  r.statement = j.at("statement").get<std::string>();
  r.segmented_text = j.at("segmented_text").get<std::string>();
  r.chunks = j.at("chunks").get<std::vector<std::string>>();
  return r;
}

CorpusStats corpus_stats(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) throw DataError("corpus_stats: empty corpus");
  CorpusStats stats;
  for (const Trajectory& t : trajectories) {
    stats.avg_steps += static_cast<double>(t.chunks.size());
    long tokens = 0;
    for (const Chunk& c : t.chunks) tokens += c.token_count;
    stats.avg_tokens += static_cast<double>(tokens);
  }
  stats.avg_steps /= static_cast<double>(trajectories.size());
  stats.avg_tokens /= static_cast<double>(trajectories.size());
  return stats;
}

}  // namespace stepwiser
