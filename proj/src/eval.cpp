#include "stepwiser/eval.hpp"

#include "stepwiser/errors.hpp"

namespace stepwiser {

BenchRecord bench_record_from_json(const nlohmann::json& j) {
  BenchRecord r;
  r.problem = j.at("problem").get<std::string>();
  r.steps = j.at("steps").get<std::vector<std::string>>();
  r.first_error = j.at("label").get<int>();
  if (r.steps.empty()) throw DataError("bench record without steps");
  if (r.first_error < -1 || r.first_error >= static_cast<int>(r.steps.size())) {
    throw DataError("bench record label out of range: " + std::to_string(r.first_error));
  }
  return r;
}

nlohmann::json to_json(const BenchRecord& record) {
  return {{"problem", record.problem}, {"steps", record.steps}, {"label", record.first_error}};
}

double harmonic_mean(double a, double b) {
  if (a + b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

int locate_first_error(const BenchRecord& record, Judge& judge, int maj_k) {
  JudgeInput input;
  input.problem = record.problem;
  for (std::size_t i = 0; i < record.steps.size(); ++i) {
    input.chunk = record.steps[i];
    const MajorityResult result = majority_judge(judge, input, maj_k);
    if (result.verdict == Label::Negative) {
      return static_cast<int>(i);
    }
    input.history.push_back(record.steps[i]);
  }
  return -1;
}

BenchScore score_bench(std::span<const int> predictions, std::span<const BenchRecord> records) {
  if (predictions.size() != records.size()) {
    throw DataError("score_bench: predictions do not cover the evaluated records");
  }
  std::size_t error_total = 0;
  std::size_t error_hits = 0;
  std::size_t correct_total = 0;
  std::size_t correct_hits = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].first_error >= 0) {
      ++error_total;
      if (predictions[i] == records[i].first_error) ++error_hits;
    } else {
      ++correct_total;
      if (predictions[i] == -1) ++correct_hits;
    }
  }
  if (error_total == 0 || correct_total == 0) {
    throw DataError("score_bench: needs at least one record of each class");
  }
  BenchScore score;
  score.acc_error = static_cast<double>(error_hits) / static_cast<double>(error_total);
  score.acc_correct = static_cast<double>(correct_hits) / static_cast<double>(correct_total);
  score.score = harmonic_mean(score.acc_error, score.acc_correct);
  return score;
}

BenchRunResult run_bench(std::span<const BenchRecord> records, Judge& judge, int maj_k) {
  BenchRunResult result;
  for (const BenchRecord& record : records) {
    try {
      const int predicted = locate_first_error(record, judge, maj_k);
      result.predictions.push_back(predicted);
      result.evaluated.push_back(record);
    } catch (const TransportError&) {
      ++result.unevaluated;
    }
  }
  result.score = score_bench(result.predictions, result.evaluated);
  return result;
}

StepwiseAccuracy stepwise_accuracy(Judge& judge, std::span<const JudgeTask> tasks, int maj_k) {
  std::size_t pos_total = 0;
  std::size_t pos_hits = 0;
  std::size_t neg_total = 0;
  std::size_t neg_hits = 0;
  for (const JudgeTask& task : tasks) {
    JudgeInput input{task.problem.statement, task.history, task.target_chunk};
    const MajorityResult result = majority_judge(judge, input, maj_k);
    const bool hit = result.verdict == task.gold_label;
    if (task.gold_label == Label::Positive) {
      ++pos_total;
      pos_hits += hit ? 1 : 0;
    } else {
      ++neg_total;
      neg_hits += hit ? 1 : 0;
    }
  }
  StepwiseAccuracy acc;
  if (pos_total > 0) acc.acc_positive = static_cast<double>(pos_hits) / pos_total;
  if (neg_total > 0) acc.acc_negative = static_cast<double>(neg_hits) / neg_total;
  if (pos_total + neg_total > 0) {
    acc.overall = static_cast<double>(pos_hits + neg_hits) / (pos_total + neg_total);
  }
  return acc;
}

}  // namespace stepwiser
