#pragma once

#include <span>
#include <string>
#include <vector>

#include "stepwiser/dataset.hpp"
#include "stepwiser/judge.hpp"

namespace stepwiser {

// First-error localization record: the loader accepts the public benchmark
// field layout {problem, steps[], label}, where label -1 marks a fully
// correct solution.
struct BenchRecord {
  std::string problem;
  std::vector<std::string> steps;
  int first_error = -1;
};

BenchRecord bench_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BenchRecord& record);

struct BenchScore {
  double acc_error = 0.0;    // exact first-error index matches on erroneous records
  double acc_correct = 0.0;  // -1 predictions on correct records
  double score = 0.0;        // harmonic mean of the two accuracies
};

// 2ab/(a+b), defined 0 when the denominator is 0.
double harmonic_mean(double a, double b);

// Judges steps in order and stops at the first Negative (later verdicts
// cannot change the prediction); returns -1 when every step passes.
int locate_first_error(const BenchRecord& record, Judge& judge, int maj_k = 1);

BenchScore score_bench(std::span<const int> predictions, std::span<const BenchRecord> records);

struct BenchRunResult {
  BenchScore score;
  std::vector<int> predictions;            // aligned with evaluated records
  std::vector<BenchRecord> evaluated;
  std::size_t unevaluated = 0;             // transport failures, excluded from scoring
};

BenchRunResult run_bench(std::span<const BenchRecord> records, Judge& judge, int maj_k = 1);

struct StepwiseAccuracy {
  double acc_positive = 0.0;
  double acc_negative = 0.0;
  double overall = 0.0;
};

// In-distribution verdict-match rates on gold-labeled judge tasks.
StepwiseAccuracy stepwise_accuracy(Judge& judge, std::span<const JudgeTask> tasks,
                                   int maj_k = 1);

}  // namespace stepwiser
