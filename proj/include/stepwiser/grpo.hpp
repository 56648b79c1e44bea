#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stepwiser/core.hpp"
#include "stepwiser/rng.hpp"

namespace stepwiser {

// Desk-scale stand-in for a rendered judge prompt: a feature vector with a
// binary gold verdict, linearly separable by construction.
struct SynthJudgeTask {
  std::vector<double> features;
  Label gold = Label::Positive;
};

// Balanced, margin-separated task set generated from a hidden unit vector.
std::vector<SynthJudgeTask> make_synth_tasks(int count, int dim, std::uint64_t seed,
                                             double margin = 0.25);

// Logistic verdict policy: P(Positive | x) = sigmoid(w.x + b).
struct ToyJudgePolicy {
  std::vector<double> weights;
  double bias = 0.0;

  static ToyJudgePolicy zeros(int dim);

  double positive_probability(std::span<const double> features) const;
  double log_prob(Label verdict, std::span<const double> features) const;
  double entropy(std::span<const double> features) const;
  Label sample(std::span<const double> features, Rng& rng) const;
  Label argmax(std::span<const double> features) const;
};

struct GrpoConfig {
  int group_size = 4;
  double eps_low = 0.2;
  double eps_high = 0.28;  // clip-higher: wider upward band than eps_low
  double learning_rate = 0.1;
  int batch_size = 32;
  int total_updates = 2000;
  double advantage_epsilon = 1e-8;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
};

// i.i.d. verdict draws with their log-probabilities under the sampling policy.
std::vector<std::pair<Label, double>> sample_group(const ToyJudgePolicy& policy,
                                                   const SynthJudgeTask& task, int group_size,
                                                   Rng& rng);

// Group-relative advantages: (r - mean) / (population_std + epsilon); groups
// with all-equal rewards yield exactly zero advantages.
std::vector<double> grpo_advantages(std::span<const double> rewards, double advantage_epsilon);

struct GroupSample {
  Label verdict = Label::Positive;
  double logp_old = 0.0;
  double advantage = 0.0;
};

// Mean over samples of min(ratio * A, clip(ratio, 1-eps_low, 1+eps_high) * A),
// with ratio the current/sampling-time probability ratio of the sampled verdict.
double clipped_surrogate(const ToyJudgePolicy& policy, std::span<const double> features,
                         std::span<const GroupSample> samples, double eps_low, double eps_high);

// Analytic gradient of the surrogate above, accumulated into grad_w/grad_b.
void accumulate_surrogate_gradient(const ToyJudgePolicy& policy,
                                   std::span<const double> features,
                                   std::span<const GroupSample> samples, double eps_low,
                                   double eps_high, std::span<double> grad_w, double& grad_b);

struct UpdateDiagnostics {
  double mean_reward = 0.0;
  int zero_gradient_groups = 0;
  int groups = 0;
  bool finite = true;  // false aborts the run; parameters were not touched
};

// One GRPO step: sample a group per task, score verdicts against gold,
// standardize rewards within each group, ascend the clipped surrogate.
// Parameters change once per batch; a batch of all-equal-reward groups is an
// exact no-op.
UpdateDiagnostics clipped_update(ToyJudgePolicy& policy, std::span<const SynthJudgeTask> batch,
                                 const GrpoConfig& config, Rng& rng);

struct TrainReport {
  std::vector<double> mean_reward;            // per update
  std::vector<double> entropy;                // mean verdict entropy per update
  std::vector<double> zero_gradient_fraction; // per update
  double final_holdout_accuracy = 0.0;
  int updates_run = 0;
  bool diverged = false;
  ToyJudgePolicy final_policy;
};

TrainReport train(std::span<const SynthJudgeTask> tasks, const GrpoConfig& config);

nlohmann::json to_json(const TrainReport& report);

}  // namespace stepwiser
