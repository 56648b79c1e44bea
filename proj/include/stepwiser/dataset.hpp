#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stepwiser/annotation.hpp"
#include "stepwiser/core.hpp"

namespace stepwiser {

// One step-level judge training/eval prompt.
struct JudgeTask {
  Problem problem;
  std::vector<std::string> history;  // chunks strictly before the target
  std::string target_chunk;
  Label gold_label = Label::Negative;
  std::string trajectory_id;
  int step_index = 0;
};

// One task per chunk; task i's history is chunks 0..i-1 verbatim.
std::vector<JudgeTask> explode_trajectory(const Trajectory& trajectory, const Problem& problem,
                                          std::span<const StepLabel> labels,
                                          const std::string& trajectory_id);

// Fills {problem}, {history}, {chunk} into the versioned judge template.
// History chunks are joined by a blank line; an empty history renders as the
// literal "None".
std::string render_judge_prompt(const std::string& problem,
                                std::span<const std::string> history,
                                const std::string& chunk);
std::string render_judge_prompt(const JudgeTask& task);

// Keeps tasks whose rendered prompt token count lies within [min, max].
std::vector<JudgeTask> length_filter(std::span<const JudgeTask> tasks, int min_prompt_tokens,
                                     int max_prompt_tokens = 3096);

struct BalanceReport {
  std::size_t before_positive = 0;
  std::size_t before_negative = 0;
  std::size_t after_positive = 0;
  std::size_t after_negative = 0;
  std::uint64_t seed = 0;
};

// Down-samples the majority class (seeded, without replacement) to the
// minority count and shuffles deterministically. Single-class input is an
// error: there is nothing to balance against.
std::pair<std::vector<JudgeTask>, BalanceReport> balance(std::span<const JudgeTask> tasks,
                                                         std::uint64_t seed);

nlohmann::json to_json(const JudgeTask& task);
JudgeTask judge_task_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BalanceReport& report);

}  // namespace stepwiser
