#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stepwiser/core.hpp"
#include "stepwiser/provider.hpp"
#include "stepwiser/rng.hpp"
#include "stepwiser/verdict.hpp"

namespace stepwiser {

struct JudgeInput {
  std::string problem;
  std::vector<std::string> history;
  std::string chunk;
};

// One step-level judgment. `ballot` distinguishes repeated calls on the same
// input (Maj@k), so deterministic judges can vary per ballot without shared
// state.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual JudgeVerdict judge(const JudgeInput& input, int ballot) = 0;

  JudgeVerdict judge(const JudgeInput& input) { return judge(input, 0); }
};

// Collects k ballots and applies majority_vote.
MajorityResult majority_judge(Judge& judge, const JudgeInput& input, int k);

// Perfect judge for the sim environment, with optional flip noise. Noise
// decisions are drawn from an internal stream, one per call.
class SimOracleJudge : public Judge {
 public:
  explicit SimOracleJudge(double flip_rate = 0.0, std::uint64_t seed = 0);

  JudgeVerdict judge(const JudgeInput& input, int ballot) override;

 private:
  double flip_rate_;
  Rng rng_;
};

class ConstantJudge : public Judge {
 public:
  explicit ConstantJudge(Label always) : always_(always) {}

  JudgeVerdict judge(const JudgeInput&, int) override {
    return {always_, "", ParseStatus::Ok};
  }

 private:
  Label always_;
};

struct GeneratorJudgeConfig {
  double temperature = 1.0;
  int max_tokens = 3096;
  std::uint64_t seed = 0;
};

// Renders the judge prompt, samples one completion, parses the verdict.
// Ballot b of the same input uses a distinct derived seed.
class GeneratorJudge : public Judge {
 public:
  GeneratorJudge(Generator& generator, GeneratorJudgeConfig config = {});

  JudgeVerdict judge(const JudgeInput& input, int ballot) override;

 private:
  Generator& generator_;
  GeneratorJudgeConfig config_;
};

}  // namespace stepwiser
