#include <doctest.h>

#include <map>
#include <set>

#include "stepwiser/dataset.hpp"
#include "stepwiser/errors.hpp"
#include "stepwiser/rng.hpp"

using namespace stepwiser;

namespace {

Trajectory three_chunk_trajectory() {
  Trajectory t;
  t.problem_id = "p1";
  t.chunks = {{0, "set up x + 1 = 5", 5}, {1, "so x = 4", 4}, {2, "\\boxed{4}", 1}};
  t.outcome = 1;
  return t;
}

std::vector<StepLabel> labels_for(const Trajectory& t, std::vector<Label> labels) {
  std::vector<StepLabel> out;
  for (std::size_t i = 0; i < t.chunks.size(); ++i) {
    StepLabel l;
    l.step_index = static_cast<int>(i);
    l.label = labels[i];
    out.push_back(l);
  }
  return out;
}

// Test-side inverse parser: pulls the three fields back out of a rendered
// prompt using the template's delimiters.
struct PromptFields {
  std::string problem;
  std::string history;
  std::string chunk;
};

PromptFields invert_prompt(const std::string& prompt) {
  const std::string p_key = "Mathematical Problem: ";
  const std::string h_key = "\nHistorical Reasoning Path: ";
  const std::string c_key = "\nNew Reasoning Chunk: ";
  const std::string tail = "\n\n---\n\nOutput format:";
  const auto p_at = prompt.find(p_key);
  const auto h_at = prompt.find(h_key, p_at);
  const auto c_at = prompt.find(c_key, h_at);
  const auto end = prompt.find(tail, c_at);
  REQUIRE(p_at != std::string::npos);
  REQUIRE(h_at != std::string::npos);
  REQUIRE(c_at != std::string::npos);
  REQUIRE(end != std::string::npos);
  PromptFields f;
  f.problem = prompt.substr(p_at + p_key.size(), h_at - (p_at + p_key.size()));
  f.history = prompt.substr(h_at + h_key.size(), c_at - (h_at + h_key.size()));
  f.chunk = prompt.substr(c_at + c_key.size(), end - (c_at + c_key.size()));
  return f;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("explode_trajectory builds one task per step") {
  const Problem problem{"p1", "solve for x", "4"};
  const Trajectory t = three_chunk_trajectory();
  const auto labels =
      labels_for(t, {Label::Positive, Label::Positive, Label::Negative});
  const auto tasks = explode_trajectory(t, problem, labels, "p1#0");

  REQUIRE(tasks.size() == 3);
  CHECK(tasks[0].history.empty());
  CHECK(tasks[1].history == std::vector<std::string>{"set up x + 1 = 5"});
  CHECK(tasks[2].history ==
        std::vector<std::string>{"set up x + 1 = 5", "so x = 4"});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(tasks[i].target_chunk == t.chunks[i].text);
    CHECK(tasks[i].step_index == static_cast<int>(i));
    CHECK(tasks[i].trajectory_id == "p1#0");
  }
  CHECK(tasks[2].gold_label == Label::Negative);

  const auto short_labels = labels_for(t, {Label::Positive, Label::Positive, Label::Positive});
  CHECK_THROWS_AS(
      explode_trajectory(t, problem, std::span(short_labels).subspan(0, 2), "p1#0"),
      DataError);
}

TEST_CASE("render_judge_prompt fills the versioned template") {
  const Problem problem{"p1", "solve for x", "4"};
  JudgeTask task;
  task.problem = problem;
  task.history = {};
  task.target_chunk = "x = 4";
  const std::string prompt = render_judge_prompt(task);

  CHECK(prompt.find("reasoning validator for mathematical problems") != std::string::npos);
  CHECK(prompt.find("Historical Reasoning Path: None") != std::string::npos);
  CHECK(prompt.find("New Reasoning Chunk: x = 4") != std::string::npos);
  CHECK(prompt.find("{problem}") == std::string::npos);
  CHECK(prompt.find("\\boxed{Positive}") != std::string::npos);
}

TEST_CASE("render_judge_prompt joins history with blank lines") {
  JudgeTask task;
  task.problem = {"p", "statement", "1"};
  task.history = {"first step", "second step"};
  task.target_chunk = "third step";
  const std::string prompt = render_judge_prompt(task);
  CHECK(prompt.find("Historical Reasoning Path: first step\n\nsecond step") !=
        std::string::npos);
}

TEST_CASE("prompt round-trip recovers the three fields") {
  Rng rng(404);
  static const char* words[] = {"triangle", "x=3", "sum", "prove", "therefore", "45"};
  auto random_text = [&](std::size_t max_words) {
    std::string out;
    const std::size_t n = 1 + rng.next_index(max_words);
    for (std::size_t i = 0; i < n; ++i) {
      if (!out.empty()) out += ' ';
      out += words[rng.next_index(6)];
    }
    return out;
  };

  for (int iter = 0; iter < 500; ++iter) {
    JudgeTask task;
    task.problem = {"p", random_text(8), "1"};
    const std::size_t h = rng.next_index(4);
    for (std::size_t i = 0; i < h; ++i) task.history.push_back(random_text(5));
    task.target_chunk = random_text(6);

    const PromptFields fields = invert_prompt(render_judge_prompt(task));
    CHECK(fields.problem == task.problem.statement);
    CHECK(fields.chunk == task.target_chunk);
    if (task.history.empty()) {
      CHECK(fields.history == "None");
    } else {
      std::string joined;
      for (const auto& s : task.history) {
        if (!joined.empty()) joined += "\n\n";
        joined += s;
      }
      CHECK(fields.history == joined);
    }
  }
}

TEST_CASE("length_filter bounds rendered prompt tokens") {
  const Problem problem{"p", "short statement", "1"};
  JudgeTask small;
  small.problem = problem;
  small.target_chunk = "tiny";

  JudgeTask huge = small;
  for (int i = 0; i < 5000; ++i) huge.target_chunk += " word";

  std::vector<JudgeTask> tasks{small, huge};
  const auto kept = length_filter(tasks, 10, 3096);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].target_chunk == "tiny");

  // Degenerate band keeps at most what falls inside it.
  const auto band = length_filter(tasks, 3095, 3096);
  CHECK(band.empty());

  CHECK_THROWS_AS(length_filter(tasks, 100, 100), ConfigError);
  CHECK_THROWS_AS(length_filter(tasks, 0, 10), ConfigError);
}

namespace {

std::vector<JudgeTask> labeled_tasks(std::size_t positives, std::size_t negatives) {
  std::vector<JudgeTask> tasks;
  for (std::size_t i = 0; i < positives + negatives; ++i) {
    JudgeTask t;
    t.problem = {"p" + std::to_string(i), "statement", "1"};
    t.target_chunk = "chunk " + std::to_string(i);
    t.gold_label = i < positives ? Label::Positive : Label::Negative;
    t.step_index = static_cast<int>(i);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

}  // namespace

TEST_CASE("balance downsamples the majority class to equality") {
  const auto tasks = labeled_tasks(70, 30);
  const auto [balanced, report] = balance(tasks, 99);
  CHECK(report.before_positive == 70);
  CHECK(report.before_negative == 30);
  CHECK(report.after_positive == 30);
  CHECK(report.after_negative == 30);
  CHECK(balanced.size() == 60);

  std::size_t pos = 0;
  std::set<int> seen;
  for (const JudgeTask& t : balanced) {
    pos += t.gold_label == Label::Positive ? 1 : 0;
    // Every retained task existed in the input.
    CHECK(t.step_index >= 0);
    CHECK(t.step_index < 100);
    seen.insert(t.step_index);
  }
  CHECK(pos == 30);
  CHECK(seen.size() == 60);  // no duplicates introduced
}

TEST_CASE("balance keeps membership on already-balanced input") {
  const auto tasks = labeled_tasks(25, 25);
  const auto [balanced, report] = balance(tasks, 7);
  CHECK(report.after_positive == 25);
  CHECK(report.after_negative == 25);
  std::set<int> in;
  std::set<int> out;
  for (const auto& t : tasks) in.insert(t.step_index);
  for (const auto& t : balanced) out.insert(t.step_index);
  CHECK(in == out);
}

TEST_CASE("balance is deterministic per seed") {
  const auto tasks = labeled_tasks(80, 20);
  const auto [a, ra] = balance(tasks, 123);
  const auto [b, rb] = balance(tasks, 123);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].step_index == b[i].step_index);
  }
  const auto [c, rc] = balance(tasks, 124);
  bool any_difference = c.size() != a.size();
  for (std::size_t i = 0; !any_difference && i < a.size(); ++i) {
    any_difference = a[i].step_index != c[i].step_index;
  }
  CHECK(any_difference);
}

TEST_CASE("balance rejects single-class input") {
  CHECK_THROWS_AS(balance(labeled_tasks(10, 0), 1), DataError);
  CHECK_THROWS_AS(balance(labeled_tasks(0, 10), 1), DataError);
  CHECK_THROWS_AS(balance(labeled_tasks(0, 0), 1), DataError);
}

TEST_CASE("judge task json round-trip") {
  JudgeTask task;
  task.problem = {"p1", "solve", "4"};
  task.history = {"a", "b"};
  task.target_chunk = "c";
  task.gold_label = Label::Negative;
  task.trajectory_id = "p1#3";
  task.step_index = 2;

  const JudgeTask back = judge_task_from_json(to_json(task));
  CHECK(back.problem.id == "p1");
  CHECK(back.problem.reference_answer == "4");
  CHECK(back.history == task.history);
  CHECK(back.target_chunk == "c");
  CHECK(back.gold_label == Label::Negative);
  CHECK(back.trajectory_id == "p1#3");
  CHECK(back.step_index == 2);
}

}  // TEST_SUITE

#include "stepwiser/simpolicy.hpp"

TEST_SUITE("dataset") {

TEST_CASE("explode after annotation matches the analytic labeler on the sim env") {
  SimEnvConfig cfg{5, 0.25, 17};
  const Problem problem = make_sim_problem(cfg, 0);
  SimGenerator generator(cfg);
  LabelingConfig label_cfg;
  label_cfg.strategy = Strategy::RelRatio;
  label_cfg.rollouts_per_step = 256;

  for (std::uint64_t s = 0; s < 10; ++s) {
    const Trajectory t = roll_sim_trajectory(cfg, problem, s);
    const AnnotatedTrajectory annotated = annotate_trajectory(
        t, problem, generator, label_cfg, VerifierConfig{}, derive_seed(3, {s}));
    const auto tasks =
        explode_trajectory(t, problem, annotated.labels, problem.id + "#" + std::to_string(s));
    REQUIRE(tasks.size() == t.chunks.size());

    // Analytic gold labels via the closed-form Q sequence.
    SimState state;
    double q_prev = analytic_q(state, cfg);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      state.corrupted = state.corrupted || sim_chunk_is_error(t.chunks[i].text);
      ++state.emitted;
      const double q_cur = analytic_q(state, cfg);
      const Label expected =
          label_rel_ratio({0, 1, 0, q_prev}, {1, 1, 0, q_cur}, label_cfg.gamma).label;
      CHECK(tasks[i].gold_label == expected);
      CHECK(tasks[i].target_chunk == t.chunks[i].text);
      q_prev = q_cur;
    }
  }
}

}  // TEST_SUITE
