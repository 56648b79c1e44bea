#include "stepwiser/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stepwiser/errors.hpp"
#include "stepwiser/verdict.hpp"

namespace stepwiser {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<SynthJudgeTask> make_synth_tasks(int count, int dim, std::uint64_t seed,
                                             double margin) {
  if (count < 2 || dim < 1) throw ConfigError("make_synth_tasks: count >= 2 and dim >= 1");
  Rng rng(seed);
  std::vector<double> generator(static_cast<std::size_t>(dim));
  double norm = 0.0;
  for (double& g : generator) {
    g = rng.next_gaussian();
    norm += g * g;
  }
  norm = std::sqrt(norm);
  for (double& g : generator) g /= norm;

  std::vector<SynthJudgeTask> tasks;
  tasks.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const Label gold = (i % 2 == 0) ? Label::Positive : Label::Negative;
    SynthJudgeTask task;
    task.gold = gold;
    task.features.resize(static_cast<std::size_t>(dim));
    while (true) {
      for (double& f : task.features) f = rng.next_gaussian();
      const double z = dot(task.features, generator);
      if (gold == Label::Positive && z >= margin) break;
      if (gold == Label::Negative && z <= -margin) break;
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

ToyJudgePolicy ToyJudgePolicy::zeros(int dim) {
  ToyJudgePolicy p;
  p.weights.assign(static_cast<std::size_t>(dim), 0.0);
  return p;
}

double ToyJudgePolicy::positive_probability(std::span<const double> features) const {
  return sigmoid(dot(weights, features) + bias);
}

double ToyJudgePolicy::log_prob(Label verdict, std::span<const double> features) const {
  const double z = dot(weights, features) + bias;
  return verdict == Label::Positive ? log_sigmoid(z) : log_sigmoid(-z);
}

double ToyJudgePolicy::entropy(std::span<const double> features) const {
  const double p = positive_probability(features);
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h;
}

Label ToyJudgePolicy::sample(std::span<const double> features, Rng& rng) const {
  return rng.next_bernoulli(positive_probability(features)) ? Label::Positive
                                                            : Label::Negative;
}

Label ToyJudgePolicy::argmax(std::span<const double> features) const {
  return positive_probability(features) >= 0.5 ? Label::Positive : Label::Negative;
}

std::vector<std::pair<Label, double>> sample_group(const ToyJudgePolicy& policy,
                                                   const SynthJudgeTask& task, int group_size,
                                                   Rng& rng) {
  if (group_size < 2) throw ConfigError("sample_group: group size must be >= 2");
  std::vector<std::pair<Label, double>> group;
  group.reserve(static_cast<std::size_t>(group_size));
  for (int j = 0; j < group_size; ++j) {
    const Label verdict = policy.sample(task.features, rng);
    group.emplace_back(verdict, policy.log_prob(verdict, task.features));
  }
  return group;
}

std::vector<double> grpo_advantages(std::span<const double> rewards, double advantage_epsilon) {
  if (rewards.size() < 2) throw ConfigError("grpo_advantages: group size must be >= 2");
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) /
                      static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());
  const double std_dev = std::sqrt(var);
  std::vector<double> advantages(rewards.size(), 0.0);
  if (std_dev == 0.0) return advantages;  // all-equal rewards carry no signal
  for (std::size_t j = 0; j < rewards.size(); ++j) {
    advantages[j] = (rewards[j] - mean) / (std_dev + advantage_epsilon);
  }
  return advantages;
}

double clipped_surrogate(const ToyJudgePolicy& policy, std::span<const double> features,
                         std::span<const GroupSample> samples, double eps_low, double eps_high) {
  double total = 0.0;
  for (const GroupSample& s : samples) {
    const double ratio = std::exp(policy.log_prob(s.verdict, features) - s.logp_old);
    const double clipped = std::clamp(ratio, 1.0 - eps_low, 1.0 + eps_high);
    total += std::min(ratio * s.advantage, clipped * s.advantage);
  }
  return total / static_cast<double>(samples.size());
}

void accumulate_surrogate_gradient(const ToyJudgePolicy& policy,
                                   std::span<const double> features,
                                   std::span<const GroupSample> samples, double eps_low,
                                   double eps_high, std::span<double> grad_w, double& grad_b) {
  const double inv = 1.0 / static_cast<double>(samples.size());
  const double p = policy.positive_probability(features);
  for (const GroupSample& s : samples) {
    if (s.advantage == 0.0) continue;
    const double ratio = std::exp(policy.log_prob(s.verdict, features) - s.logp_old);
    const bool flows = s.advantage > 0.0 ? ratio <= 1.0 + eps_high : ratio >= 1.0 - eps_low;
    if (!flows) continue;
    // d/dtheta [ratio * A] = A * ratio * grad log p(verdict)
    const double score = s.verdict == Label::Positive ? (1.0 - p) : -p;
    const double scale = s.advantage * ratio * score * inv;
    for (std::size_t i = 0; i < features.size(); ++i) grad_w[i] += scale * features[i];
    grad_b += scale;
  }
}

UpdateDiagnostics clipped_update(ToyJudgePolicy& policy, std::span<const SynthJudgeTask> batch,
                                 const GrpoConfig& config, Rng& rng) {
  if (batch.empty()) throw ConfigError("clipped_update: empty batch");

  UpdateDiagnostics diagnostics;
  std::vector<double> grad_w(policy.weights.size(), 0.0);
  double grad_b = 0.0;
  double reward_sum = 0.0;
  long reward_count = 0;
  const RewardConfig reward_config;

  for (const SynthJudgeTask& task : batch) {
    const auto group = sample_group(policy, task, config.group_size, rng);
    std::vector<double> rewards;
    rewards.reserve(group.size());
    for (const auto& [verdict, logp] : group) {
      const JudgeVerdict parsed{verdict, "", ParseStatus::Ok};
      rewards.push_back(reward(parsed, task.gold, reward_config));
    }
    reward_sum = std::accumulate(rewards.begin(), rewards.end(), reward_sum);
    reward_count += static_cast<long>(rewards.size());

    const std::vector<double> advantages = grpo_advantages(rewards, config.advantage_epsilon);
    ++diagnostics.groups;
    if (std::all_of(advantages.begin(), advantages.end(), [](double a) { return a == 0.0; })) {
      ++diagnostics.zero_gradient_groups;
      continue;
    }
    std::vector<GroupSample> samples;
    samples.reserve(group.size());
    for (std::size_t j = 0; j < group.size(); ++j) {
      samples.push_back({group[j].first, group[j].second, advantages[j]});
    }
    accumulate_surrogate_gradient(policy, task.features, samples, config.eps_low,
                                  config.eps_high, grad_w, grad_b);
  }

  diagnostics.mean_reward = reward_sum / static_cast<double>(reward_count);

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad_w) g *= inv_batch;
  grad_b *= inv_batch;

  for (double g : grad_w) {
    if (!std::isfinite(g)) diagnostics.finite = false;
  }
  if (!std::isfinite(grad_b)) diagnostics.finite = false;
  if (!diagnostics.finite) return diagnostics;

  for (std::size_t i = 0; i < policy.weights.size(); ++i) {
    policy.weights[i] += config.learning_rate * grad_w[i];
  }
  policy.bias += config.learning_rate * grad_b;
  return diagnostics;
}

TrainReport train(std::span<const SynthJudgeTask> tasks, const GrpoConfig& config) {
  if (tasks.size() < 4) throw ConfigError("train: need at least 4 tasks");
  if (config.total_updates < 1 || config.batch_size < 1) {
    throw ConfigError("train: total_updates and batch_size must be positive");
  }

  Rng split_rng(derive_seed(config.seed, {fnv1a64("holdout-split")}));
  std::vector<std::size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[split_rng.next_index(i)]);
  }
  std::size_t holdout_count =
      static_cast<std::size_t>(config.holdout_fraction * static_cast<double>(tasks.size()));
  holdout_count = std::min(holdout_count, tasks.size() - 2);
  std::vector<SynthJudgeTask> holdout;
  std::vector<SynthJudgeTask> training;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < holdout_count ? holdout : training).push_back(tasks[order[i]]);
  }

  ToyJudgePolicy policy = ToyJudgePolicy::zeros(static_cast<int>(tasks[0].features.size()));
  Rng rng(derive_seed(config.seed, {fnv1a64("train-loop")}));
  TrainReport report;

  std::vector<std::size_t> cycle(training.size());
  std::iota(cycle.begin(), cycle.end(), 0);
  std::size_t cursor = cycle.size();  // force an initial shuffle

  for (int update = 0; update < config.total_updates; ++update) {
    std::vector<SynthJudgeTask> batch;
    batch.reserve(static_cast<std::size_t>(config.batch_size));
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor >= cycle.size()) {
        for (std::size_t i = cycle.size(); i > 1; --i) {
          std::swap(cycle[i - 1], cycle[rng.next_index(i)]);
        }
        cursor = 0;
      }
      batch.push_back(training[cycle[cursor++]]);
    }

    const UpdateDiagnostics diagnostics = clipped_update(policy, batch, config, rng);
    report.mean_reward.push_back(diagnostics.mean_reward);
    report.zero_gradient_fraction.push_back(static_cast<double>(diagnostics.zero_gradient_groups) /
                                            static_cast<double>(diagnostics.groups));
    double entropy_sum = 0.0;
    for (const SynthJudgeTask& task : batch) entropy_sum += policy.entropy(task.features);
    report.entropy.push_back(entropy_sum / static_cast<double>(batch.size()));
    ++report.updates_run;
    if (!diagnostics.finite) {
      report.diverged = true;
      break;
    }
  }

  std::size_t hits = 0;
  for (const SynthJudgeTask& task : holdout) {
    if (policy.argmax(task.features) == task.gold) ++hits;
  }
  report.final_holdout_accuracy =
      holdout.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(holdout.size());
  report.final_policy = policy;
  return report;
}

nlohmann::json to_json(const TrainReport& report) {
  return {{"mean_reward", report.mean_reward},
          {"entropy", report.entropy},
          {"zero_gradient_fraction", report.zero_gradient_fraction},
          {"final_holdout_accuracy", report.final_holdout_accuracy},
          {"updates_run", report.updates_run},
          {"diverged", report.diverged}};
}

}  // namespace stepwiser
