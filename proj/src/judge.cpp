#include "stepwiser/judge.hpp"

#include "stepwiser/dataset.hpp"
#include "stepwiser/errors.hpp"
#include "stepwiser/simpolicy.hpp"

namespace stepwiser {

MajorityResult majority_judge(Judge& judge, const JudgeInput& input, int k) {
  if (k < 1) throw ConfigError("majority_judge: k must be >= 1");
  std::vector<JudgeVerdict> ballots;
  ballots.reserve(static_cast<std::size_t>(k));
  for (int b = 0; b < k; ++b) {
    ballots.push_back(judge.judge(input, b));
  }
  return majority_vote(ballots);
}

SimOracleJudge::SimOracleJudge(double flip_rate, std::uint64_t seed)
    : flip_rate_(flip_rate), rng_(seed) {}

JudgeVerdict SimOracleJudge::judge(const JudgeInput& input, int) {
  Chunk chunk;
  chunk.text = input.chunk;
  const Label verdict = flip_rate_ > 0.0 ? oracle_judge(chunk, flip_rate_, rng_)
                                         : oracle_judge(chunk);
  return {verdict, "", ParseStatus::Ok};
}

GeneratorJudge::GeneratorJudge(Generator& generator, GeneratorJudgeConfig config)
    : generator_(generator), config_(config) {}

JudgeVerdict GeneratorJudge::judge(const JudgeInput& input, int ballot) {
  GenerationRequest request;
  request.messages.push_back(
      {Role::User, render_judge_prompt(input.problem, input.history, input.chunk)});
  request.temperature = config_.temperature;
  request.max_tokens = config_.max_tokens;
  request.n = 1;
  request.seed = derive_seed(
      config_.seed,
      {fnv1a64(input.problem), fnv1a64(input.chunk), input.history.size(),
       static_cast<std::uint64_t>(ballot)});
  const GenerationResponse response = generator_.generate(request);
  return parse_verdict(response.texts.at(0));
}

}  // namespace stepwiser
