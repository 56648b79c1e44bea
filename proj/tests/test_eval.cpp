#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "stepwiser/errors.hpp"
#include "stepwiser/eval.hpp"
#include "stepwiser/simpolicy.hpp"

using namespace stepwiser;

namespace {

class CountingJudge : public Judge {
 public:
  explicit CountingJudge(Judge& inner) : inner_(inner) {}

  JudgeVerdict judge(const JudgeInput& input, int ballot) override {
    ++calls;
    return inner_.judge(input, ballot);
  }

  int calls = 0;

 private:
  Judge& inner_;
};

class FlippingJudge : public Judge {
 public:
  explicit FlippingJudge(Judge& inner) : inner_(inner) {}

  JudgeVerdict judge(const JudgeInput& input, int ballot) override {
    JudgeVerdict v = inner_.judge(input, ballot);
    if (v.ok()) {
      v.verdict = *v.verdict == Label::Positive ? Label::Negative : Label::Positive;
    }
    return v;
  }

 private:
  Judge& inner_;
};

class FailingJudge : public Judge {
 public:
  JudgeVerdict judge(const JudgeInput&, int) override {
    throw TransportError("judge endpoint down");
  }
};

BenchRecord sim_bench_record(const SimEnvConfig& cfg, const Problem& problem,
                             std::uint64_t seed) {
  const Trajectory t = roll_sim_trajectory(cfg, problem, seed);
  BenchRecord record;
  record.problem = problem.statement;
  record.first_error = -1;
  for (std::size_t i = 0; i < t.chunks.size(); ++i) {
    record.steps.push_back(t.chunks[i].text);
    if (record.first_error < 0 && sim_chunk_is_error(t.chunks[i].text)) {
      record.first_error = static_cast<int>(i);
    }
  }
  return record;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("bench record loader follows the public field layout") {
  const nlohmann::json j{{"problem", "2+2?"},
                         {"steps", {"step one", "step two"}},
                         {"label", 1}};
  const BenchRecord r = bench_record_from_json(j);
  CHECK(r.problem == "2+2?");
  CHECK(r.steps.size() == 2);
  CHECK(r.first_error == 1);

  nlohmann::json bad = j;
  bad["label"] = 5;
  CHECK_THROWS_AS(bench_record_from_json(bad), DataError);
  bad["label"] = -2;
  CHECK_THROWS_AS(bench_record_from_json(bad), DataError);
}

TEST_CASE("harmonic mean arithmetic") {
  CHECK(harmonic_mean(0.665, 0.800) == doctest::Approx(0.726).epsilon(0.001));
  CHECK(harmonic_mean(0.5, 0.5) == doctest::Approx(0.5));
  CHECK(harmonic_mean(0.0, 0.9) == 0.0);
  CHECK(harmonic_mean(0.0, 0.0) == 0.0);
  // Symmetry and fixed points.
  for (double a = 0.0; a <= 1.0; a += 0.125) {
    CHECK(harmonic_mean(a, a) == doctest::Approx(a));
    for (double b = 0.0; b <= 1.0; b += 0.125) {
      CHECK(harmonic_mean(a, b) == doctest::Approx(harmonic_mean(b, a)));
      CHECK(harmonic_mean(a, b) <= 2.0 * std::min(a, b) + 1e-12);
    }
  }
}

TEST_CASE("locate_first_error with the oracle judge") {
  SimEnvConfig cfg{6, 0.4, 77};
  const Problem problem = make_sim_problem(cfg, 0);
  SimOracleJudge oracle;

  bool saw_error_record = false;
  bool saw_clean_record = false;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const BenchRecord record = sim_bench_record(cfg, problem, s);
    CHECK(locate_first_error(record, oracle) == record.first_error);
    saw_error_record = saw_error_record || record.first_error >= 0;
    saw_clean_record = saw_clean_record || record.first_error < 0;
  }
  CHECK(saw_error_record);
  CHECK(saw_clean_record);
}

TEST_CASE("locate_first_error degenerate judges and early stop") {
  SimEnvConfig cfg{5, 0.5, 3};
  const Problem problem = make_sim_problem(cfg, 0);
  const BenchRecord record = sim_bench_record(cfg, problem, 0);

  ConstantJudge always_positive(Label::Positive);
  CHECK(locate_first_error(record, always_positive) == -1);

  ConstantJudge always_negative(Label::Negative);
  CountingJudge counting(always_negative);
  CHECK(locate_first_error(record, counting) == 0);
  CHECK(counting.calls == 1);  // stops at the first Negative
}

TEST_CASE("locate_first_error issues at most predicted+1 judge calls") {
  SimEnvConfig cfg{6, 0.3, 5};
  const Problem problem = make_sim_problem(cfg, 0);
  SimOracleJudge oracle;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const BenchRecord record = sim_bench_record(cfg, problem, s);
    CountingJudge counting(oracle);
    const int predicted = locate_first_error(record, counting);
    const int budget = predicted == -1 ? static_cast<int>(record.steps.size()) : predicted + 1;
    CHECK(counting.calls <= budget);
  }
}

TEST_CASE("score_bench arithmetic and class checks") {
  std::vector<BenchRecord> records;
  std::vector<int> predictions;
  // 4 erroneous records, 2 exact hits; 2 correct records, 1 hit.
  for (int i = 0; i < 4; ++i) {
    records.push_back({"p", {"a", "b"}, 1});
    predictions.push_back(i < 2 ? 1 : 0);
  }
  records.push_back({"p", {"a", "b"}, -1});
  predictions.push_back(-1);
  records.push_back({"p", {"a", "b"}, -1});
  predictions.push_back(0);

  const BenchScore score = score_bench(predictions, records);
  CHECK(score.acc_error == doctest::Approx(0.5));
  CHECK(score.acc_correct == doctest::Approx(0.5));
  CHECK(score.score == doctest::Approx(0.5));

  std::vector<BenchRecord> one_class{{"p", {"a"}, 0}};
  std::vector<int> one_prediction{0};
  CHECK_THROWS_AS(score_bench(one_prediction, one_class), DataError);
  std::vector<int> mismatched{0, 1};
  CHECK_THROWS_AS(score_bench(mismatched, one_class), DataError);
}

TEST_CASE("run_bench excludes unevaluated records and reports them") {
  SimEnvConfig cfg{4, 0.5, 9};
  const Problem problem = make_sim_problem(cfg, 0);
  std::vector<BenchRecord> records;
  for (std::uint64_t s = 0; s < 40; ++s) records.push_back(sim_bench_record(cfg, problem, s));

  // Fails exactly once, on the very first call.
  class SometimesFailingJudge : public Judge {
   public:
    explicit SometimesFailingJudge(Judge& inner) : inner_(inner) {}
    JudgeVerdict judge(const JudgeInput& input, int ballot) override {
      if (++calls_ == 1) throw TransportError("flaky");
      return inner_.judge(input, ballot);
    }

   private:
    Judge& inner_;
    int calls_ = 0;
  };

  SimOracleJudge oracle;
  SometimesFailingJudge flaky(oracle);
  const BenchRunResult result = run_bench(records, flaky, 1);
  CHECK(result.unevaluated == 1);
  CHECK(result.evaluated.size() + result.unevaluated == records.size());
  // Evaluated records were still judged by the oracle, hence perfectly.
  CHECK(result.score.score == doctest::Approx(1.0));
}

TEST_CASE("stepwise_accuracy") {
  SimEnvConfig cfg{5, 0.5, 21};
  const Problem problem = make_sim_problem(cfg, 0);

  std::vector<JudgeTask> tasks;
  std::size_t positives = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const Trajectory t = roll_sim_trajectory(cfg, problem, s);
    for (std::size_t i = 0; i < t.chunks.size(); ++i) {
      JudgeTask task;
      task.problem = problem;
      for (std::size_t h = 0; h < i; ++h) task.history.push_back(t.chunks[h].text);
      task.target_chunk = t.chunks[i].text;
      task.gold_label =
          sim_chunk_is_error(t.chunks[i].text) ? Label::Negative : Label::Positive;
      positives += task.gold_label == Label::Positive ? 1 : 0;
      tasks.push_back(std::move(task));
    }
  }

  SimOracleJudge oracle;
  const StepwiseAccuracy perfect = stepwise_accuracy(oracle, tasks);
  CHECK(perfect.acc_positive == doctest::Approx(1.0));
  CHECK(perfect.acc_negative == doctest::Approx(1.0));
  CHECK(perfect.overall == doctest::Approx(1.0));

  ConstantJudge always_positive(Label::Positive);
  const StepwiseAccuracy constant = stepwise_accuracy(always_positive, tasks);
  CHECK(constant.acc_positive == doctest::Approx(1.0));
  CHECK(constant.acc_negative == doctest::Approx(0.0));
  CHECK(constant.overall == doctest::Approx(static_cast<double>(positives) / tasks.size()));

  // A verdict-flipping wrapper maps accuracy a -> 1-a per class.
  FlippingJudge flipped(oracle);
  const StepwiseAccuracy inverted = stepwise_accuracy(flipped, tasks);
  CHECK(inverted.acc_positive == doctest::Approx(1.0 - perfect.acc_positive));
  CHECK(inverted.acc_negative == doctest::Approx(1.0 - perfect.acc_negative));
}

TEST_CASE("run_bench propagates non-transport judge failures") {
  std::vector<BenchRecord> records{{"p", {"not a sim chunk"}, 0},
                                   {"p", {"also not"}, -1}};
  SimOracleJudge oracle;
  CHECK_THROWS_AS(run_bench(records, oracle, 1), DataError);
  FailingJudge failing;
  CHECK_THROWS_AS(run_bench(records, failing, 1), DataError);  // nothing evaluated
}

}  // TEST_SUITE

TEST_SUITE("eval") {

TEST_CASE("majority voting suppresses judge flip noise") {
  SimEnvConfig cfg{5, 0.5, 41};
  const Problem problem = make_sim_problem(cfg, 0);
  std::vector<JudgeTask> tasks;
  for (std::uint64_t s = 0; s < 60; ++s) {
    const Trajectory t = roll_sim_trajectory(cfg, problem, s);
    for (std::size_t i = 0; i < t.chunks.size(); ++i) {
      JudgeTask task;
      task.problem = problem;
      for (std::size_t h = 0; h < i; ++h) task.history.push_back(t.chunks[h].text);
      task.target_chunk = t.chunks[i].text;
      task.gold_label =
          sim_chunk_is_error(t.chunks[i].text) ? Label::Negative : Label::Positive;
      tasks.push_back(std::move(task));
    }
  }

  SimOracleJudge noisy_single(0.3, 7);
  const StepwiseAccuracy single = stepwise_accuracy(noisy_single, tasks, 1);
  SimOracleJudge noisy_voted(0.3, 7);
  const StepwiseAccuracy voted = stepwise_accuracy(noisy_voted, tasks, 5);
  CHECK(voted.overall > single.overall);
  CHECK(voted.overall > 0.75);  // Maj@5 over a 30% flip rate recovers most verdicts
}

}  // TEST_SUITE
