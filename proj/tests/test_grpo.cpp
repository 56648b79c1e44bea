#include <doctest.h>

#include <cmath>

#include "stepwiser/errors.hpp"
#include "stepwiser/grpo.hpp"

using namespace stepwiser;

namespace {

// Independent separability oracle: plain gradient descent on the logistic
// loss. If this fits the data, a linear verdict policy can too.
double logistic_fit_accuracy(std::span<const SynthJudgeTask> tasks, int iters, double lr) {
  const std::size_t dim = tasks[0].features.size();
  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  for (int it = 0; it < iters; ++it) {
    std::vector<double> gw(dim, 0.0);
    double gb = 0.0;
    for (const SynthJudgeTask& t : tasks) {
      double z = b;
      for (std::size_t i = 0; i < dim; ++i) z += w[i] * t.features[i];
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double y = t.gold == Label::Positive ? 1.0 : 0.0;
      const double g = y - p;
      for (std::size_t i = 0; i < dim; ++i) gw[i] += g * t.features[i];
      gb += g;
    }
    for (std::size_t i = 0; i < dim; ++i) w[i] += lr * gw[i] / tasks.size();
    b += lr * gb / tasks.size();
  }
  std::size_t hits = 0;
  for (const SynthJudgeTask& t : tasks) {
    double z = b;
    for (std::size_t i = 0; i < dim; ++i) z += w[i] * t.features[i];
    const bool positive = z >= 0.0;
    hits += positive == (t.gold == Label::Positive) ? 1 : 0;
  }
  return static_cast<double>(hits) / tasks.size();
}

ToyJudgePolicy random_policy(int dim, Rng& rng, double scale) {
  ToyJudgePolicy p = ToyJudgePolicy::zeros(dim);
  for (double& w : p.weights) w = scale * rng.next_gaussian();
  p.bias = scale * rng.next_gaussian();
  return p;
}

}  // namespace

TEST_SUITE("grpo") {

TEST_CASE("make_synth_tasks is balanced and separable") {
  const auto tasks = make_synth_tasks(2000, 8, 42);
  std::size_t positives = 0;
  for (const auto& t : tasks) positives += t.gold == Label::Positive ? 1 : 0;
  CHECK(positives == 1000);
  CHECK(logistic_fit_accuracy(tasks, 400, 1.0) >= 0.99);
}

TEST_CASE("sample_group") {
  const SynthJudgeTask task{{1.0, -1.0}, Label::Positive};

  SUBCASE("saturated policy is deterministic") {
    ToyJudgePolicy policy{{50.0, 0.0}, 0.0};
    Rng rng(1);
    const auto group = sample_group(policy, task, 4, rng);
    REQUIRE(group.size() == 4);
    for (const auto& [verdict, logp] : group) {
      CHECK(verdict == Label::Positive);
      CHECK(logp == doctest::Approx(policy.log_prob(Label::Positive, task.features)));
    }
  }
  SUBCASE("uniform policy draws are binomial") {
    ToyJudgePolicy policy = ToyJudgePolicy::zeros(2);
    Rng rng(7);
    int positives = 0;
    const int draws = 10000;
    for (int i = 0; i < draws / 4; ++i) {
      for (const auto& [verdict, logp] : sample_group(policy, task, 4, rng)) {
        positives += verdict == Label::Positive ? 1 : 0;
      }
    }
    const double sigma = std::sqrt(0.25 / draws);
    CHECK(std::abs(positives / double(draws) - 0.5) < 3.0 * sigma);
  }
  SUBCASE("group size is enforced") {
    ToyJudgePolicy policy = ToyJudgePolicy::zeros(2);
    Rng rng(3);
    CHECK(sample_group(policy, task, 4, rng).size() == 4);
    CHECK_THROWS_AS(sample_group(policy, task, 1, rng), ConfigError);
  }
}

TEST_CASE("grpo_advantages") {
  const std::vector<double> equal{1.0, 1.0, 1.0, 1.0};
  CHECK(grpo_advantages(equal, 0.0) == std::vector<double>{0.0, 0.0, 0.0, 0.0});

  const std::vector<double> one_hot{1.0, 0.0, 0.0, 0.0};
  const auto a = grpo_advantages(one_hot, 0.0);
  CHECK(a[0] == doctest::Approx(1.7321).epsilon(1e-4));
  CHECK(a[1] == doctest::Approx(-0.5774).epsilon(1e-4));
  CHECK(a[2] == doctest::Approx(-0.5774).epsilon(1e-4));
  CHECK(a[3] == doctest::Approx(-0.5774).epsilon(1e-4));

  const std::vector<double> pair{1.0, 0.0};
  const auto two = grpo_advantages(pair, 0.0);
  CHECK(two[0] == doctest::Approx(1.0));
  CHECK(two[1] == doctest::Approx(-1.0));
}

TEST_CASE("grpo_advantages are mean-zero unless the group is flat") {
  Rng rng(9);
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<double> rewards;
    const std::size_t g = 2 + rng.next_index(6);
    for (std::size_t i = 0; i < g; ++i) rewards.push_back(rng.next_bernoulli(0.5) ? 1.0 : 0.0);
    const auto advantages = grpo_advantages(rewards, 1e-8);
    double sum = 0.0;
    for (double v : advantages) sum += v;
    CHECK(std::abs(sum) < 1e-12);
  }
}

TEST_CASE("surrogate gradient matches finite differences") {
  Rng rng(1234);
  const int dim = 5;
  const double eps_low = 0.2;
  const double eps_high = 0.28;
  const double h = 1e-6;
  int tested = 0;

  while (tested < 40) {
    const ToyJudgePolicy sampler = random_policy(dim, rng, 0.5);
    ToyJudgePolicy current = random_policy(dim, rng, 0.5);
    std::vector<double> features(dim);
    for (double& f : features) f = rng.next_gaussian();

    std::vector<GroupSample> samples;
    bool near_boundary = false;
    for (int j = 0; j < 4; ++j) {
      GroupSample s;
      s.verdict = rng.next_bernoulli(0.5) ? Label::Positive : Label::Negative;
      s.logp_old = sampler.log_prob(s.verdict, features);
      s.advantage = rng.next_gaussian();
      const double ratio = std::exp(current.log_prob(s.verdict, features) - s.logp_old);
      // Keep a safety margin so the perturbed evaluations stay on one branch.
      if (std::abs(ratio - (1.0 - eps_low)) < 1e-3 || std::abs(ratio - (1.0 + eps_high)) < 1e-3) {
        near_boundary = true;
      }
      samples.push_back(s);
    }
    if (near_boundary) continue;
    ++tested;

    std::vector<double> grad_w(dim, 0.0);
    double grad_b = 0.0;
    accumulate_surrogate_gradient(current, features, samples, eps_low, eps_high, grad_w, grad_b);

    for (int k = 0; k <= dim; ++k) {
      ToyJudgePolicy plus = current;
      ToyJudgePolicy minus = current;
      double analytic;
      if (k < dim) {
        plus.weights[k] += h;
        minus.weights[k] -= h;
        analytic = grad_w[static_cast<std::size_t>(k)];
      } else {
        plus.bias += h;
        minus.bias -= h;
        analytic = grad_b;
      }
      const double numeric = (clipped_surrogate(plus, features, samples, eps_low, eps_high) -
                              clipped_surrogate(minus, features, samples, eps_low, eps_high)) /
                             (2.0 * h);
      const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
      CHECK(std::abs(analytic - numeric) / scale < 1e-4);
    }
  }
}

TEST_CASE("at the sampling-time parameters the update is the plain policy gradient") {
  Rng rng(55);
  const int dim = 4;
  const ToyJudgePolicy policy = random_policy(dim, rng, 0.3);
  std::vector<double> features(dim);
  for (double& f : features) f = rng.next_gaussian();

  std::vector<GroupSample> samples;
  for (int j = 0; j < 4; ++j) {
    GroupSample s;
    s.verdict = j % 2 == 0 ? Label::Positive : Label::Negative;
    s.logp_old = policy.log_prob(s.verdict, features);  // ratio is exactly 1
    s.advantage = j == 0 ? 1.5 : -0.5;
    samples.push_back(s);
  }

  std::vector<double> grad_w(dim, 0.0);
  double grad_b = 0.0;
  accumulate_surrogate_gradient(policy, features, samples, 0.2, 0.28, grad_w, grad_b);

  // Vanilla REINFORCE gradient: mean of A * grad log p(verdict).
  const double p = policy.positive_probability(features);
  std::vector<double> expected_w(dim, 0.0);
  double expected_b = 0.0;
  for (const GroupSample& s : samples) {
    const double score = s.verdict == Label::Positive ? (1.0 - p) : -p;
    for (int i = 0; i < dim; ++i) expected_w[static_cast<std::size_t>(i)] +=
        0.25 * s.advantage * score * features[static_cast<std::size_t>(i)];
    expected_b += 0.25 * s.advantage * score;
  }
  for (int i = 0; i < dim; ++i) {
    CHECK(grad_w[static_cast<std::size_t>(i)] ==
          doctest::Approx(expected_w[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
  CHECK(grad_b == doctest::Approx(expected_b).epsilon(1e-12));
}

TEST_CASE("clip-higher admits larger upward ratios than symmetric clipping") {
  // One positive-advantage sample at ratio 1.25.
  const int dim = 1;
  ToyJudgePolicy old_policy = ToyJudgePolicy::zeros(dim);
  const std::vector<double> features{1.0};
  GroupSample s;
  s.verdict = Label::Positive;
  s.logp_old = old_policy.log_prob(Label::Positive, features) - std::log(1.25);
  s.advantage = 1.0;
  const std::vector<GroupSample> samples{s};

  const double with_higher = clipped_surrogate(old_policy, features, samples, 0.2, 0.28);
  const double symmetric = clipped_surrogate(old_policy, features, samples, 0.2, 0.2);
  CHECK(with_higher == doctest::Approx(1.25));
  CHECK(symmetric == doctest::Approx(1.20));
  CHECK(with_higher >= symmetric);
}

TEST_CASE("all-equal-reward batches leave parameters exactly unchanged") {
  // Gold all Positive and a saturated policy: every group scores all-1.
  std::vector<SynthJudgeTask> tasks;
  for (int i = 0; i < 8; ++i) {
    tasks.push_back({{1.0, 1.0}, Label::Positive});
  }
  ToyJudgePolicy policy{{30.0, 30.0}, 0.0};
  const ToyJudgePolicy before = policy;
  GrpoConfig config;
  config.batch_size = 8;
  Rng rng(3);
  const UpdateDiagnostics diagnostics = clipped_update(policy, tasks, config, rng);
  CHECK(diagnostics.zero_gradient_groups == diagnostics.groups);
  CHECK(policy.weights == before.weights);
  CHECK(policy.bias == before.bias);
  CHECK(diagnostics.mean_reward == doctest::Approx(1.0));
}

TEST_CASE("a one-hot-reward group increases the rewarded verdict's probability") {
  // Find a seeded draw whose group is [Positive, Negative, Negative, Negative]
  // under a 50/50 policy; gold is Positive so rewards are [1,0,0,0].
  const SynthJudgeTask task{{1.0, 0.5}, Label::Positive};
  ToyJudgePolicy base = ToyJudgePolicy::zeros(2);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng probe(seed);
    const auto group = sample_group(base, task, 4, probe);
    if (group[0].first != Label::Positive) continue;
    if (group[1].first != Label::Negative || group[2].first != Label::Negative ||
        group[3].first != Label::Negative) {
      continue;
    }
    ToyJudgePolicy policy = base;
    const double before = policy.positive_probability(task.features);
    GrpoConfig config;
    Rng rng(seed);
    clipped_update(policy, {&task, 1}, config, rng);
    const double after = policy.positive_probability(task.features);
    CHECK(after > before);
    return;
  }
  FAIL("no seed produced the [P,N,N,N] group");
}

TEST_CASE("training on separable tasks reaches held-out accuracy >= 0.95") {
  const auto tasks = make_synth_tasks(2000, 8, 7);
  GrpoConfig config;
  config.total_updates = 2000;
  config.seed = 11;
  const TrainReport report = train(tasks, config);
  CHECK_FALSE(report.diverged);
  CHECK(report.updates_run == 2000);
  CHECK(report.final_holdout_accuracy >= 0.95);
  CHECK(report.mean_reward.size() == 2000);
  // Reward should end far above the 0.5 coin-flip start.
  CHECK(report.mean_reward.back() > 0.8);
}

TEST_CASE("constant-label data collapses to the majority verdict") {
  std::vector<SynthJudgeTask> tasks;
  Rng rng(19);
  for (int i = 0; i < 200; ++i) {
    SynthJudgeTask t;
    t.gold = Label::Positive;  // deliberately unbalanced
    t.features = {rng.next_gaussian(), rng.next_gaussian()};
    tasks.push_back(std::move(t));
  }
  GrpoConfig config;
  config.total_updates = 400;
  config.seed = 5;
  const TrainReport report = train(tasks, config);
  // The policy ends up predicting Positive everywhere...
  std::size_t positive_predictions = 0;
  for (const SynthJudgeTask& t : tasks) {
    positive_predictions += report.final_policy.argmax(t.features) == Label::Positive ? 1 : 0;
  }
  CHECK(positive_predictions == tasks.size());
  // ...and the reward saturates, so groups stop carrying gradient signal.
  CHECK(report.zero_gradient_fraction.back() > 0.9);
  CHECK(report.mean_reward.back() > 0.95);
}

TEST_CASE("zero learning rate leaves the policy unchanged") {
  const auto tasks = make_synth_tasks(200, 4, 3);
  GrpoConfig config;
  config.learning_rate = 0.0;
  config.total_updates = 50;
  config.seed = 2;
  const TrainReport report = train(tasks, config);
  for (double w : report.final_policy.weights) CHECK(w == 0.0);
  CHECK(report.final_policy.bias == 0.0);
  // Coin-flip policy: mean reward hovers around one half.
  CHECK(report.mean_reward.back() > 0.3);
  CHECK(report.mean_reward.back() < 0.7);
}

}  // TEST_SUITE
