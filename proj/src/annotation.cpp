#include "stepwiser/annotation.hpp"

#include <cmath>
#include <limits>

#include "stepwiser/errors.hpp"
#include "stepwiser/rng.hpp"

namespace stepwiser {

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::AbsQ: return "abs-q";
    case Strategy::RelEffective: return "rel-effective";
    case Strategy::RelRatio: return "rel-ratio";
  }
  return "abs-q";
}

Strategy strategy_from_string(std::string_view text) {
  if (text == "abs-q") return Strategy::AbsQ;
  if (text == "rel-effective") return Strategy::RelEffective;
  if (text == "rel-ratio") return Strategy::RelRatio;
  throw ConfigError("unknown strategy: '" + std::string(text) + "'");
}

double best_of_n_q(double q_pi, int n) {
  if (q_pi < 0.0 || q_pi > 1.0) throw DataError("best_of_n_q: q outside [0,1]");
  if (n < 1) throw DataError("best_of_n_q: n must be >= 1");
  return 1.0 - std::pow(1.0 - q_pi, n);
}

StepLabel label_abs_q(const QEstimate& q) {
  StepLabel label;
  label.step_index = q.step_index - 1;
  label.strategy = Strategy::AbsQ;
  label.diagnostics = {q.q_hat, q.q_hat, q.q_hat};
  label.label = q.q_hat > 0.0 ? Label::Positive : Label::Negative;
  return label;
}

StepLabel label_rel_effective(const QEstimate& q_prev, const QEstimate& q_cur, double alpha,
                              int n) {
  const double effective =
      q_cur.q_hat + alpha * (best_of_n_q(q_cur.q_hat, n) - best_of_n_q(q_prev.q_hat, n));
  StepLabel label;
  label.step_index = q_cur.step_index - 1;
  label.strategy = Strategy::RelEffective;
  label.diagnostics = {q_prev.q_hat, q_cur.q_hat, effective};
  label.label = effective > 0.0 ? Label::Positive : Label::Negative;
  return label;
}

StepLabel label_rel_ratio(const QEstimate& q_prev, const QEstimate& q_cur, double gamma) {
  StepLabel label;
  label.step_index = q_cur.step_index - 1;
  label.strategy = Strategy::RelRatio;
  if (q_prev.q_hat == 0.0) {
    // Zero denominator: a step that rescues a hopeless prefix is progress.
    const double derived = q_cur.q_hat > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    label.diagnostics = {q_prev.q_hat, q_cur.q_hat, derived};
    label.label = q_cur.q_hat > 0.0 ? Label::Positive : Label::Negative;
    return label;
  }
  const double ratio = q_cur.q_hat / q_prev.q_hat;
  label.diagnostics = {q_prev.q_hat, q_cur.q_hat, ratio};
  label.label = ratio > gamma ? Label::Positive : Label::Negative;
  return label;
}

StepLabel label_step(const QEstimate& q_prev, const QEstimate& q_cur,
                     const LabelingConfig& config) {
  switch (config.strategy) {
    case Strategy::AbsQ: return label_abs_q(q_cur);
    case Strategy::RelEffective:
      return label_rel_effective(q_prev, q_cur, config.alpha, config.best_of_n);
    case Strategy::RelRatio: return label_rel_ratio(q_prev, q_cur, config.gamma);
  }
  throw ConfigError("unknown labeling strategy");
}

std::uint64_t step_rollout_seed(std::uint64_t run_seed, const std::string& problem_id,
                                int step_index) {
  return derive_seed(run_seed, {fnv1a64(problem_id), static_cast<std::uint64_t>(step_index)});
}

namespace {

std::string join_chunks(std::span<const Chunk> chunks) {
  std::string out;
  for (const Chunk& c : chunks) {
    if (!out.empty()) out += "\n\n";
    out += c.text;
  }
  return out;
}

}  // namespace

QEstimate estimate_q(const Problem& problem, std::span<const Chunk> prefix_chunks,
                     Generator& generator, int num_rollouts, const VerifierConfig& verifier,
                     std::uint64_t rollout_seed, int step_index) {
  if (num_rollouts < 1) throw ConfigError("estimate_q: M must be >= 1");

  GenerationRequest request;
  request.messages.push_back({Role::User, problem.statement});
  if (!prefix_chunks.empty()) {
    request.messages.push_back({Role::Assistant, join_chunks(prefix_chunks)});
  }
  request.n = num_rollouts;
  request.seed = rollout_seed;

  const GenerationResponse response = generator.generate(request);
  if (static_cast<int>(response.texts.size()) != num_rollouts) {
    throw ProtocolError("estimate_q: backend returned " +
                        std::to_string(response.texts.size()) + " completions, expected " +
                        std::to_string(num_rollouts));
  }

  QEstimate estimate;
  estimate.step_index = step_index;
  estimate.num_rollouts = num_rollouts;
  for (const std::string& text : response.texts) {
    estimate.num_successes += score_response(text, problem.reference_answer, verifier);
  }
  estimate.q_hat =
      static_cast<double>(estimate.num_successes) / static_cast<double>(num_rollouts);
  return estimate;
}

AnnotatedTrajectory annotate_trajectory(const Trajectory& trajectory, const Problem& problem,
                                        Generator& generator, const LabelingConfig& config,
                                        const VerifierConfig& verifier, std::uint64_t run_seed) {
  if (trajectory.chunks.empty()) throw DataError("annotate_trajectory: empty trajectory");
  if (problem.reference_answer.empty()) {
    throw DataError("annotate_trajectory: problem has no reference answer");
  }

  const int num_chunks = static_cast<int>(trajectory.chunks.size());
  AnnotatedTrajectory out;
  out.estimates.reserve(static_cast<std::size_t>(num_chunks) + 1);

  // Prompt-level baseline and every proper prefix get rollout estimates.
  for (int k = 0; k < num_chunks; ++k) {
    const std::span<const Chunk> prefix(trajectory.chunks.data(),
                                        static_cast<std::size_t>(k));
    out.estimates.push_back(estimate_q(problem, prefix, generator, config.rollouts_per_step,
                                       verifier, step_rollout_seed(run_seed, problem.id, k),
                                       k));
  }

  // After the final chunk the solution is complete: its value is the
  // trajectory's own verified outcome, not a rollout estimate.
  int outcome;
  if (trajectory.outcome) {
    outcome = *trajectory.outcome;
  } else {
    outcome = score_response(trajectory.chunks.back().text, problem.reference_answer, verifier);
  }
  QEstimate final_estimate;
  final_estimate.step_index = num_chunks;
  final_estimate.num_rollouts = 1;
  final_estimate.num_successes = outcome;
  final_estimate.q_hat = static_cast<double>(outcome);
  out.estimates.push_back(final_estimate);

  out.labels.reserve(static_cast<std::size_t>(num_chunks));
  for (int i = 0; i < num_chunks; ++i) {
    out.labels.push_back(label_step(out.estimates[static_cast<std::size_t>(i)],
                                    out.estimates[static_cast<std::size_t>(i) + 1], config));
  }
  return out;
}

std::vector<PrefilterEntry> prefilter_prompts(std::span<const Problem> problems,
                                              Generator& generator, int k,
                                              const VerifierConfig& verifier,
                                              std::uint64_t run_seed) {
  if (k < 2) throw ConfigError("prefilter_prompts: k must be >= 2");
  std::vector<PrefilterEntry> entries;
  entries.reserve(problems.size());
  for (const Problem& problem : problems) {
    GenerationRequest request;
    request.messages.push_back({Role::User, problem.statement});
    request.n = k;
    request.seed = derive_seed(run_seed, {fnv1a64(problem.id), fnv1a64("prefilter")});

    PrefilterEntry entry;
    entry.problem_id = problem.id;
    entry.total = k;
    try {
      const GenerationResponse response = generator.generate(request);
      for (const std::string& text : response.texts) {
        entry.pass_count += score_response(text, problem.reference_answer, verifier);
      }
      entry.kept = entry.pass_count > 0 && entry.pass_count < k;
    } catch (const TransportError& e) {
      entry.kept = false;
      entry.error = e.what();
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

nlohmann::json annotation_record_json(const std::string& problem_id, const StepLabel& label,
                                      const QEstimate& q_cur, const LabelingConfig& config) {
  nlohmann::json params{{"gamma", config.gamma},
                        {"alpha", config.alpha},
                        {"best_of_n", config.best_of_n}};
  double derived = label.diagnostics.derived;
  nlohmann::json derived_json;
  if (std::isinf(derived)) {
    derived_json = "inf";
  } else {
    derived_json = derived;
  }
  return {{"problem_id", problem_id},
          {"step_index", label.step_index},
          {"M", q_cur.num_rollouts},
          {"successes", q_cur.num_successes},
          {"q_hat", q_cur.q_hat},
          {"strategy", to_string(label.strategy)},
          {"params", params},
          {"label", to_string(label.label)},
          {"diagnostics",
           {{"q_prev", label.diagnostics.q_prev},
            {"q_cur", label.diagnostics.q_cur},
            {"derived", derived_json}}}};
}

}  // namespace stepwiser
