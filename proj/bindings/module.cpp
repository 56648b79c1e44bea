#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stepwiser/annotation.hpp"
#include "stepwiser/core.hpp"
#include "stepwiser/dataset.hpp"
#include "stepwiser/errors.hpp"
#include "stepwiser/eval.hpp"
#include "stepwiser/grpo.hpp"
#include "stepwiser/judge.hpp"
#include "stepwiser/search.hpp"
#include "stepwiser/segmentation.hpp"
#include "stepwiser/simpolicy.hpp"
#include "stepwiser/verdict.hpp"

namespace py = pybind11;
using namespace stepwiser;

namespace {

QEstimate as_estimate(double q_hat, int step_index) {
  QEstimate q;
  q.step_index = step_index;
  q.num_rollouts = 1;
  q.num_successes = q_hat > 0.0 ? 1 : 0;
  q.q_hat = q_hat;
  return q;
}

py::dict label_dict(const StepLabel& label) {
  py::dict d;
  d["label"] = to_string(label.label);
  d["q_prev"] = label.diagnostics.q_prev;
  d["q_cur"] = label.diagnostics.q_cur;
  d["derived"] = label.diagnostics.derived;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stepwise judge pipeline: answer verification, chunk parsing, "
            "Q-value labeling, verdict handling, benchmark scoring, chunk-reset "
            "search, and the toy GRPO trainer.";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "extract_boxed",
      [](const std::string& text) -> py::object {
        const BoxedExtraction r = extract_boxed(text);
        if (!r.found()) return py::none();
        return py::str(r.answer);
      },
      py::arg("text"),
      "Content of the last brace-balanced \\boxed{...}, or None.");

  m.def(
      "verify_answer",
      [](const std::string& extracted, const std::string& reference, bool strip_whitespace,
         bool strip_wrappers, bool case_fold) {
        VerifierConfig cfg{strip_whitespace, strip_wrappers, case_fold};
        return verify_answer(extracted, reference, cfg);
      },
      py::arg("extracted"), py::arg("reference"), py::arg("strip_whitespace") = true,
      py::arg("strip_wrappers") = true, py::arg("case_fold") = false);

  m.def("approx_token_count",
        [](const std::string& text) { return approx_token_count(text); });

  m.def(
      "parse_chunks",
      [](const std::string& tagged) {
        const ParseResult r = parse_chunks(tagged);
        if (!r.ok()) {
          throw DataError(r.diagnostic.message + " at byte " +
                          std::to_string(r.diagnostic.position));
        }
        return r.response->chunks;
      },
      py::arg("tagged_text"));

  m.def(
      "verify_reconstruction",
      [](const std::vector<std::string>& chunks, const std::string& original) {
        return verify_reconstruction(chunks, original);
      },
      py::arg("chunks"), py::arg("original"));

  m.def("split_double_newline",
        [](const std::string& text) { return split_double_newline(text); });

  m.def("best_of_n_q", &best_of_n_q, py::arg("q"), py::arg("n"));

  m.def(
      "label_abs_q",
      [](double q) { return label_dict(label_abs_q(as_estimate(q, 1))); },
      py::arg("q"));
  m.def(
      "label_rel_effective",
      [](double q_prev, double q_cur, double alpha, int n) {
        return label_dict(
            label_rel_effective(as_estimate(q_prev, 0), as_estimate(q_cur, 1), alpha, n));
      },
      py::arg("q_prev"), py::arg("q_cur"), py::arg("alpha") = 0.8, py::arg("n") = 4);
  m.def(
      "label_rel_ratio",
      [](double q_prev, double q_cur, double gamma) {
        return label_dict(
            label_rel_ratio(as_estimate(q_prev, 0), as_estimate(q_cur, 1), gamma));
      },
      py::arg("q_prev"), py::arg("q_cur"), py::arg("gamma") = 0.7);

  m.def(
      "parse_verdict",
      [](const std::string& output) {
        const JudgeVerdict v = parse_verdict(output);
        py::dict d;
        d["status"] = to_string(v.parse_status);
        d["verdict"] = v.ok() ? py::object(py::str(to_string(*v.verdict))) : py::none();
        d["rationale"] = v.rationale;
        return d;
      },
      py::arg("judge_output"));

  m.def(
      "reward",
      [](const std::string& verdict_or_none, const std::string& gold, bool format_penalty,
         double penalty) {
        RewardConfig config;
        config.mode = format_penalty ? RewardConfig::Mode::FormatPenalty
                                     : RewardConfig::Mode::Standard;
        config.penalty = penalty;
        JudgeVerdict verdict;
        if (verdict_or_none.empty()) {
          verdict.parse_status = ParseStatus::MissingBox;
        } else {
          verdict = {label_from_string(verdict_or_none), "", ParseStatus::Ok};
        }
        return reward(verdict, label_from_string(gold), config);
      },
      py::arg("verdict"), py::arg("gold"), py::arg("format_penalty") = false,
      py::arg("penalty") = -1.0,
      "Match reward; pass verdict='' for a parse failure.");

  m.def(
      "majority_vote",
      [](const std::vector<std::string>& verdicts) {
        std::vector<JudgeVerdict> ballots;
        for (const std::string& v : verdicts) {
          if (v.empty()) {
            ballots.push_back({std::nullopt, "", ParseStatus::MissingBox});
          } else {
            ballots.push_back({label_from_string(v), "", ParseStatus::Ok});
          }
        }
        return to_string(majority_vote(ballots).verdict);
      },
      py::arg("verdicts"), "Majority verdict; '' entries are parse failures.");

  m.def("harmonic_mean", &harmonic_mean, py::arg("a"), py::arg("b"));

  m.def("render_judge_prompt",
        [](const std::string& problem, const std::vector<std::string>& history,
           const std::string& chunk) { return render_judge_prompt(problem, history, chunk); },
        py::arg("problem"), py::arg("history"), py::arg("chunk"));

  m.def(
      "analytic_q",
      [](int emitted, bool corrupted, int horizon, double p_error) {
        SimEnvConfig cfg;
        cfg.horizon = horizon;
        cfg.p_error = p_error;
        return analytic_q({emitted, corrupted}, cfg);
      },
      py::arg("emitted"), py::arg("corrupted"), py::arg("horizon"), py::arg("p_error"));

  m.def(
      "sim_search_success_rate",
      [](double p_error, int horizon, int max_retries, int episodes, std::uint64_t seed) {
        SimEnvConfig cfg;
        cfg.horizon = horizon;
        cfg.p_error = p_error;
        cfg.seed = seed;
        const Problem problem = make_sim_problem(cfg, 0);
        SimGenerator generator(cfg);
        SimOracleJudge judge;
        SearchConfig search_cfg;
        search_cfg.max_retries = max_retries;
        search_cfg.max_chunks = horizon + 1;
        int successes = 0;
        for (int e = 0; e < episodes; ++e) {
          GeneratorChunkPolicy policy(generator,
                                      derive_seed(seed, {std::uint64_t(e), 0x5eacull}));
          const SearchTrace trace =
              chunk_reset_search(problem, policy, judge, search_cfg, VerifierConfig{});
          successes += trace.outcome.value_or(0);
        }
        return static_cast<double>(successes) / episodes;
      },
      py::arg("p_error"), py::arg("horizon"), py::arg("max_retries"), py::arg("episodes"),
      py::arg("seed") = 0,
      "Oracle-judged chunk-reset search success rate on the sim environment.");

  m.def(
      "grpo_advantages",
      [](const std::vector<double>& rewards, double eps) {
        return grpo_advantages(rewards, eps);
      },
      py::arg("rewards"), py::arg("advantage_epsilon") = 1e-8);

  m.def(
      "train_toy",
      [](int num_tasks, int dim, int updates, int batch_size, int group_size, double eps_low,
         double eps_high, double learning_rate, std::uint64_t seed) {
        GrpoConfig config;
        config.total_updates = updates;
        config.batch_size = batch_size;
        config.group_size = group_size;
        config.eps_low = eps_low;
        config.eps_high = eps_high;
        config.learning_rate = learning_rate;
        config.seed = seed;
        const auto tasks = make_synth_tasks(num_tasks, dim, derive_seed(seed, {0x7a5b5ull}));
        const TrainReport report = train(tasks, config);
        py::dict d;
        d["final_holdout_accuracy"] = report.final_holdout_accuracy;
        d["updates_run"] = report.updates_run;
        d["diverged"] = report.diverged;
        d["mean_reward"] = report.mean_reward;
        d["entropy"] = report.entropy;
        d["zero_gradient_fraction"] = report.zero_gradient_fraction;
        return d;
      },
      py::arg("num_tasks") = 2000, py::arg("dim") = 8, py::arg("updates") = 2000,
      py::arg("batch_size") = 32, py::arg("group_size") = 4, py::arg("eps_low") = 0.2,
      py::arg("eps_high") = 0.28, py::arg("learning_rate") = 0.1, py::arg("seed") = 0);

  m.attr("__version__") = "0.1.0";
}
