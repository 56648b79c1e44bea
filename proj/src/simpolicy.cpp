#include "stepwiser/simpolicy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stepwiser/errors.hpp"
#include "stepwiser/segmentation.hpp"

namespace stepwiser {

namespace {

std::string sim_chunk_text(int one_based_step, const SimEnvConfig& config, bool is_error,
                           bool corrupted_after) {
  std::string text = "sim step " + std::to_string(one_based_step) + "/" +
                     std::to_string(config.horizon) + (is_error ? " err" : " ok");
  if (one_based_step == config.horizon) {
    text += "\nThe final answer is \\boxed{";
    text += corrupted_after ? kSimWrongAnswer : kSimCorrectAnswer;
    text += "}.";
  }
  return text;
}

}  // namespace

Problem make_sim_problem(const SimEnvConfig& config, int index) {
  Problem p;
  p.id = "sim-" + std::to_string(index);
  p.statement = "sim problem " + std::to_string(index) + " with " +
                std::to_string(config.horizon) + " steps";
  p.reference_answer = kSimCorrectAnswer;
  return p;
}

SimStep sim_next_chunk(const SimState& state, const SimEnvConfig& config, Rng& rng) {
  if (state.emitted >= config.horizon) {
    throw DataError("sim environment: cannot emit past the horizon");
  }
  const bool is_error = rng.next_bernoulli(config.p_error);
  SimStep step;
  step.state.emitted = state.emitted + 1;
  step.state.corrupted = state.corrupted || is_error;
  step.chunk.index = state.emitted;
  step.chunk.text = sim_chunk_text(step.state.emitted, config, is_error, step.state.corrupted);
  step.chunk.token_count = approx_token_count(step.chunk.text);
  return step;
}

double analytic_q(const SimState& state, const SimEnvConfig& config) {
  if (state.corrupted) return 0.0;
  const int remaining = config.horizon - state.emitted;
  return std::pow(1.0 - config.p_error, remaining);
}

bool sim_chunk_is_error(std::string_view chunk_text) {
  static constexpr std::string_view kPrefix = "sim step ";
  if (chunk_text.substr(0, kPrefix.size()) != kPrefix) {
    throw DataError("not a sim chunk: '" + std::string(chunk_text.substr(0, 32)) + "'");
  }
  std::string_view first_line = chunk_text;
  if (auto nl = chunk_text.find('\n'); nl != std::string_view::npos) {
    first_line = chunk_text.substr(0, nl);
  }
  if (first_line.ends_with(" ok")) return false;
  if (first_line.ends_with(" err")) return true;
  throw DataError("sim chunk without correctness marker: '" + std::string(first_line) + "'");
}

Label oracle_judge(const Chunk& chunk) {
  return sim_chunk_is_error(chunk.text) ? Label::Negative : Label::Positive;
}

Label oracle_judge(const Chunk& chunk, double flip_rate, Rng& rng) {
  Label verdict = oracle_judge(chunk);
  if (flip_rate > 0.0 && rng.next_bernoulli(flip_rate)) {
    verdict = verdict == Label::Positive ? Label::Negative : Label::Positive;
  }
  return verdict;
}

Trajectory roll_sim_trajectory(const SimEnvConfig& config, const Problem& problem,
                               std::uint64_t seed) {
  Rng rng(mix64(config.seed, seed));
  Trajectory t;
  t.problem_id = problem.id;
  SimState state;
  for (int i = 0; i < config.horizon; ++i) {
    SimStep step = sim_next_chunk(state, config, rng);
    state = step.state;
    t.chunks.push_back(std::move(step.chunk));
  }
  const BoxedExtraction boxed = extract_boxed(t.chunks.back().text);
  if (boxed.found()) {
    t.final_answer = boxed.answer;
    t.outcome = verify_answer(boxed.answer, problem.reference_answer, VerifierConfig{});
  }
  return t;
}

SimState sim_state_from_prefix(std::span<const Chunk> prefix) {
  SimState state;
  for (const Chunk& chunk : prefix) {
    state.corrupted = state.corrupted || sim_chunk_is_error(chunk.text);
    ++state.emitted;
  }
  return state;
}

GenerationResponse SimGenerator::generate(const GenerationRequest& request) {
  if (request.messages.empty()) throw ConfigError("generation request has no messages");
  if (request.n < 1) throw ConfigError("generation request n must be >= 1");

  SimState prefix_state;
  for (const Message& m : request.messages) {
    if (m.role != Role::Assistant || m.text.empty()) continue;
    prefix_state = SimState{};
    for (const std::string& part : split_double_newline(m.text)) {
      prefix_state.corrupted = prefix_state.corrupted || sim_chunk_is_error(part);
      ++prefix_state.emitted;
    }
  }
  if (prefix_state.emitted >= config_.horizon) {
    throw DataError("sim environment: prefix already at the horizon");
  }

  const bool one_chunk = std::find(request.stop.begin(), request.stop.end(), "\n\n") !=
                         request.stop.end();
  const std::uint64_t base_seed = request.seed.value_or(0);

  GenerationResponse response;
  response.texts.reserve(static_cast<std::size_t>(request.n));
  response.token_counts.reserve(static_cast<std::size_t>(request.n));
  for (int i = 0; i < request.n; ++i) {
    Rng rng(mix64(config_.seed, base_seed + static_cast<std::uint64_t>(i)));
    SimState state = prefix_state;
    std::string text;
    while (state.emitted < config_.horizon) {
      SimStep step = sim_next_chunk(state, config_, rng);
      state = step.state;
      if (!text.empty()) text += "\n\n";
      text += step.chunk.text;
      if (one_chunk) break;
    }
    response.token_counts.push_back(approx_token_count(text));
    response.texts.push_back(std::move(text));
  }
  return response;
}

}  // namespace stepwiser
