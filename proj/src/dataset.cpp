#include "stepwiser/dataset.hpp"

#include <algorithm>

#include "stepwiser/errors.hpp"
#include "stepwiser/prompts.hpp"
#include "stepwiser/rng.hpp"

namespace stepwiser {

std::vector<JudgeTask> explode_trajectory(const Trajectory& trajectory, const Problem& problem,
                                          std::span<const StepLabel> labels,
                                          const std::string& trajectory_id) {
  if (labels.size() != trajectory.chunks.size()) {
    throw DataError("explode_trajectory: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(trajectory.chunks.size()) + " chunks (trajectory " +
                    trajectory_id + ")");
  }
  std::vector<JudgeTask> tasks;
  tasks.reserve(trajectory.chunks.size());
  for (std::size_t i = 0; i < trajectory.chunks.size(); ++i) {
    JudgeTask task;
    task.problem = problem;
    for (std::size_t h = 0; h < i; ++h) {
      task.history.push_back(trajectory.chunks[h].text);
    }
    task.target_chunk = trajectory.chunks[i].text;
    task.gold_label = labels[i].label;
    task.trajectory_id = trajectory_id;
    task.step_index = static_cast<int>(i);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::string render_judge_prompt(const std::string& problem,
                                std::span<const std::string> history,
                                const std::string& chunk) {
  std::string history_text;
  if (history.empty()) {
    history_text = "None";
  } else {
    for (const std::string& h : history) {
      if (!history_text.empty()) history_text += "\n\n";
      history_text += h;
    }
  }
  std::string prompt = fill_placeholder(judge_prompt_template(), "problem", problem);
  prompt = fill_placeholder(prompt, "history", history_text);
  return fill_placeholder(prompt, "chunk", chunk);
}

std::string render_judge_prompt(const JudgeTask& task) {
  return render_judge_prompt(task.problem.statement, task.history, task.target_chunk);
}

std::vector<JudgeTask> length_filter(std::span<const JudgeTask> tasks, int min_prompt_tokens,
                                     int max_prompt_tokens) {
  if (min_prompt_tokens <= 0 || max_prompt_tokens <= 0 ||
      min_prompt_tokens >= max_prompt_tokens) {
    throw ConfigError("length_filter: thresholds must be positive with min < max");
  }
  std::vector<JudgeTask> kept;
  for (const JudgeTask& task : tasks) {
    const int tokens = approx_token_count(render_judge_prompt(task));
    if (tokens >= min_prompt_tokens && tokens <= max_prompt_tokens) {
      kept.push_back(task);
    }
  }
  return kept;
}

std::pair<std::vector<JudgeTask>, BalanceReport> balance(std::span<const JudgeTask> tasks,
                                                         std::uint64_t seed) {
  if (tasks.empty()) throw DataError("balance: no tasks");

  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    (tasks[i].gold_label == Label::Positive ? positives : negatives).push_back(i);
  }
  BalanceReport report;
  report.before_positive = positives.size();
  report.before_negative = negatives.size();
  report.seed = seed;
  if (positives.empty() || negatives.empty()) {
    throw DataError("balance: single-class input (" + std::to_string(positives.size()) +
                    " positive / " + std::to_string(negatives.size()) + " negative)");
  }

  Rng rng(seed);
  auto downsample = [&rng](std::vector<std::size_t>& pool, std::size_t target) {
    // Partial Fisher-Yates: the first `target` entries are a uniform sample.
    for (std::size_t i = 0; i < target; ++i) {
      const std::size_t j = i + rng.next_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(target);
    std::sort(pool.begin(), pool.end());  // restore input order within the class
  };

  const std::size_t target = std::min(positives.size(), negatives.size());
  if (positives.size() > target) downsample(positives, target);
  if (negatives.size() > target) downsample(negatives, target);
  report.after_positive = positives.size();
  report.after_negative = negatives.size();

  std::vector<std::size_t> selected;
  selected.reserve(2 * target);
  selected.insert(selected.end(), positives.begin(), positives.end());
  selected.insert(selected.end(), negatives.begin(), negatives.end());
  std::sort(selected.begin(), selected.end());
  for (std::size_t i = selected.size(); i > 1; --i) {
    std::swap(selected[i - 1], selected[rng.next_index(i)]);
  }

  std::vector<JudgeTask> balanced;
  balanced.reserve(selected.size());
  for (std::size_t idx : selected) balanced.push_back(tasks[idx]);
  return {std::move(balanced), report};
}

nlohmann::json to_json(const JudgeTask& task) {
  return {{"problem_id", task.problem.id},
          {"statement", task.problem.statement},
          {"history", task.history},
          {"chunk", task.target_chunk},
          {"gold_label", to_string(task.gold_label)},
          {"meta",
           {{"trajectory_id", task.trajectory_id},
            {"step_index", task.step_index},
            {"reference_answer", task.problem.reference_answer}}}};
}

JudgeTask judge_task_from_json(const nlohmann::json& j) {
  JudgeTask task;
  task.problem.id = j.at("problem_id").get<std::string>();
  task.problem.statement = j.at("statement").get<std::string>();
  task.history = j.at("history").get<std::vector<std::string>>();
  task.target_chunk = j.at("chunk").get<std::string>();
  task.gold_label = label_from_string(j.at("gold_label").get<std::string>());
  if (j.contains("meta")) {
    const auto& meta = j["meta"];
    task.trajectory_id = meta.value("trajectory_id", "");
    task.step_index = meta.value("step_index", 0);
    task.problem.reference_answer = meta.value("reference_answer", "");
  }
  return task;
}

nlohmann::json to_json(const BalanceReport& report) {
  return {{"before", {{"positive", report.before_positive}, {"negative", report.before_negative}}},
          {"after", {{"positive", report.after_positive}, {"negative", report.after_negative}}},
          {"seed", report.seed}};
}

}  // namespace stepwiser
