#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stepwiser/core.hpp"
#include "stepwiser/provider.hpp"

namespace stepwiser {

// Monte-Carlo estimate of the success probability of continuations from a
// step prefix. step_index counts the chunks in the prefix, so index 0 is the
// prompt-level baseline.
struct QEstimate {
  int step_index = 0;
  int num_rollouts = 0;
  int num_successes = 0;
  double q_hat = 0.0;
};

enum class Strategy { AbsQ, RelEffective, RelRatio };

std::string to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view text);

struct LabelingConfig {
  Strategy strategy = Strategy::RelRatio;
  double gamma = 0.7;          // Rel-Ratio threshold
  double alpha = 0.8;          // Rel-Effective weight
  int best_of_n = 4;           // best-of-n policy size for Rel-Effective
  int rollouts_per_step = 16;  // M
};

// Everything needed to recompute the label deterministically.
struct StepDiagnostics {
  double q_prev = 0.0;
  double q_cur = 0.0;
  double derived = 0.0;  // effective value or ratio; equals q_cur for AbsQ
};

struct StepLabel {
  int step_index = 0;  // 0-based chunk index the label applies to
  Label label = Label::Negative;
  Strategy strategy = Strategy::AbsQ;
  StepDiagnostics diagnostics;
};

// Success probability of the best-of-n policy: 1 - (1 - q_pi)^n.
double best_of_n_q(double q_pi, int n);

StepLabel label_abs_q(const QEstimate& q);
StepLabel label_rel_effective(const QEstimate& q_prev, const QEstimate& q_cur, double alpha,
                              int n);
StepLabel label_rel_ratio(const QEstimate& q_prev, const QEstimate& q_cur, double gamma);
StepLabel label_step(const QEstimate& q_prev, const QEstimate& q_cur,
                     const LabelingConfig& config);

// Launches M continuation rollouts from the prefix and scores each final
// answer. Rollout j is driven by rollout_seed + j, so re-runs are exact.
// Provider errors propagate; there is no partial estimate.
QEstimate estimate_q(const Problem& problem, std::span<const Chunk> prefix_chunks,
                     Generator& generator, int num_rollouts, const VerifierConfig& verifier,
                     std::uint64_t rollout_seed, int step_index);

// Per-step rollout seed: a pure function of (run seed, problem id, step).
std::uint64_t step_rollout_seed(std::uint64_t run_seed, const std::string& problem_id,
                                int step_index);

struct AnnotatedTrajectory {
  // estimates[k] is the estimate after k chunks; size H+1 including the
  // prompt-level baseline at k=0. The final entry is the trajectory's own
  // verified outcome rather than a rollout estimate.
  std::vector<QEstimate> estimates;
  std::vector<StepLabel> labels;  // one per chunk
};

AnnotatedTrajectory annotate_trajectory(const Trajectory& trajectory, const Problem& problem,
                                        Generator& generator, const LabelingConfig& config,
                                        const VerifierConfig& verifier, std::uint64_t run_seed);

struct PrefilterEntry {
  std::string problem_id;
  int pass_count = 0;
  int total = 0;
  bool kept = false;
  std::string error;  // transport failure reason; such problems are excluded
};

// pass@k prefilter: keep a problem iff 0 < pass_count < k. Problems whose
// generation fails in transport are excluded with the reason recorded.
std::vector<PrefilterEntry> prefilter_prompts(std::span<const Problem> problems,
                                              Generator& generator, int k,
                                              const VerifierConfig& verifier,
                                              std::uint64_t run_seed);

nlohmann::json annotation_record_json(const std::string& problem_id, const StepLabel& label,
                                      const QEstimate& q_cur, const LabelingConfig& config);

}  // namespace stepwiser
