// stepwiser: pipeline driver for stepwise judge data construction, evaluation,
// search, and the toy GRPO trainer. Every artifact is JSON-lines with a header
// line carrying the schema, the effective config, its digest, and the seed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stepwiser/annotation.hpp"
#include "stepwiser/core.hpp"
#include "stepwiser/dataset.hpp"
#include "stepwiser/errors.hpp"
#include "stepwiser/eval.hpp"
#include "stepwiser/fixtures.hpp"
#include "stepwiser/grpo.hpp"
#include "stepwiser/jsonl.hpp"
#include "stepwiser/judge.hpp"
#include "stepwiser/provider.hpp"
#include "stepwiser/rng.hpp"
#include "stepwiser/search.hpp"
#include "stepwiser/segmentation.hpp"
#include "stepwiser/simpolicy.hpp"
#include "stepwiser/verdict.hpp"

namespace {

using namespace stepwiser;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTransport = 3;
constexpr int kExitData = 4;

struct BackendOptions {
  std::string backend = "sim";  // sim | fixture | http
  std::string fixture_dir;
  std::string record_dir;  // record live http traffic for later replay
  ProviderConfig provider;
  SimEnvConfig sim;
};

void add_backend_options(CLI::App* cmd, BackendOptions& opts) {
  cmd->add_option("--backend", opts.backend, "Generation backend: sim, fixture, or http")
      ->check(CLI::IsMember({"sim", "fixture", "http"}))
      ->capture_default_str();
  cmd->add_option("--fixture-dir", opts.fixture_dir, "Fixture directory (backend=fixture)");
  cmd->add_option("--record-dir", opts.record_dir,
                  "Record live responses into this fixture directory (backend=http)");
  cmd->add_option("--base-url", opts.provider.base_url, "Chat-completions base URL")
      ->capture_default_str();
  cmd->add_option("--model", opts.provider.model, "Model name")->capture_default_str();
  cmd->add_option("--api-key-env", opts.provider.api_key_env,
                  "Environment variable holding the bearer token")
      ->capture_default_str();
  cmd->add_option("--max-in-flight", opts.provider.max_in_flight,
                  "Max concurrent wire requests")
      ->capture_default_str();
  cmd->add_option("--timeout-ms", opts.provider.timeout_ms, "Per-request timeout")
      ->capture_default_str();
  cmd->add_option("--provider-retries", opts.provider.max_retries,
                  "Transport retries per request")
      ->capture_default_str();
  cmd->add_option("--sim-h", opts.sim.horizon, "Sim env: chunks per solution")
      ->capture_default_str();
  cmd->add_option("--sim-p", opts.sim.p_error, "Sim env: per-chunk error probability")
      ->capture_default_str();
  cmd->add_option("--sim-seed", opts.sim.seed, "Sim env seed")->capture_default_str();
}

json backend_config_json(const BackendOptions& opts) {
  json j{{"backend", opts.backend}};
  if (opts.backend == "sim") {
    j["sim"] = {{"h", opts.sim.horizon}, {"p", opts.sim.p_error}, {"seed", opts.sim.seed}};
  } else if (opts.backend == "fixture") {
    j["fixture_dir"] = opts.fixture_dir;
  } else {
    j["base_url"] = opts.provider.base_url;
    j["model"] = opts.provider.model;
    j["max_in_flight"] = opts.provider.max_in_flight;
  }
  return j;
}

struct Backend {
  std::unique_ptr<Generator> owned_inner;
  std::unique_ptr<Generator> generator;

  Generator& get() { return *generator; }
};

Backend make_backend(const BackendOptions& opts) {
  Backend b;
  if (opts.backend == "sim") {
    b.generator = std::make_unique<SimGenerator>(opts.sim);
  } else if (opts.backend == "fixture") {
    if (opts.fixture_dir.empty()) throw ConfigError("--fixture-dir required for backend=fixture");
    b.generator = std::make_unique<ReplayGenerator>(opts.fixture_dir);
  } else {
    auto http = std::make_unique<HttpGenerator>(opts.provider);
    if (!opts.record_dir.empty()) {
      b.owned_inner = std::move(http);
      b.generator = std::make_unique<RecordingGenerator>(*b.owned_inner, opts.record_dir);
    } else {
      b.generator = std::move(http);
    }
  }
  return b;
}

struct JudgeOptions {
  std::string kind = "oracle";  // oracle | constant-positive | constant-negative | generator
  double flip_rate = 0.0;
  int maj_k = 1;
  std::uint64_t seed = 0;
};

void add_judge_options(CLI::App* cmd, JudgeOptions& opts) {
  cmd->add_option("--judge", opts.kind, "Judge backend")
      ->check(CLI::IsMember({"oracle", "constant-positive", "constant-negative", "generator"}))
      ->capture_default_str();
  cmd->add_option("--judge-flip-rate", opts.flip_rate, "Oracle flip-noise rate")
      ->capture_default_str();
  cmd->add_option("--maj-k", opts.maj_k, "Judge ballots per decision (majority vote)")
      ->capture_default_str();
}

std::unique_ptr<Judge> make_judge(const JudgeOptions& opts, Generator& generator) {
  if (opts.kind == "oracle") {
    return std::make_unique<SimOracleJudge>(opts.flip_rate, opts.seed);
  }
  if (opts.kind == "constant-positive") return std::make_unique<ConstantJudge>(Label::Positive);
  if (opts.kind == "constant-negative") return std::make_unique<ConstantJudge>(Label::Negative);
  GeneratorJudgeConfig config;
  config.seed = opts.seed;
  return std::make_unique<GeneratorJudge>(generator, config);
}

std::vector<Problem> load_problems(const std::filesystem::path& path) {
  std::vector<Problem> problems;
  for (const json& j : read_jsonl(path).records) problems.push_back(problem_from_json(j));
  if (problems.empty()) throw DataError("no problems in " + path.string());
  return problems;
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
  std::vector<Trajectory> trajectories;
  for (const json& j : read_jsonl(path).records) {
    trajectories.push_back(trajectory_from_json(j));
  }
  if (trajectories.empty()) throw DataError("no trajectories in " + path.string());
  return trajectories;
}

std::map<std::string, Problem> problem_index(const std::vector<Problem>& problems) {
  std::map<std::string, Problem> index;
  for (const Problem& p : problems) {
    if (!index.emplace(p.id, p).second) {
      throw DataError("duplicate problem id: " + p.id);
    }
  }
  return index;
}

// Assigns trajectory ids "<problem_id>#<ordinal>" by file order.
std::vector<std::string> trajectory_ids(const std::vector<Trajectory>& trajectories) {
  std::map<std::string, int> counters;
  std::vector<std::string> ids;
  ids.reserve(trajectories.size());
  for (const Trajectory& t : trajectories) {
    ids.push_back(t.problem_id + "#" + std::to_string(counters[t.problem_id]++));
  }
  return ids;
}

// ---------------------------------------------------------------------------
// segment

struct SegmentArgs {
  std::string problems_path;
  std::string out_path;
  std::string manifest_path;
  BackendOptions backend;
  SegSftConfig config;
  std::uint64_t seed = 0;
};

int run_segment(const SegmentArgs& args) {
  const std::vector<Problem> problems = load_problems(args.problems_path);
  Backend generator = make_backend(args.backend);
  Backend segmenter = make_backend(args.backend);

  std::vector<std::string> already_completed;
  const std::string manifest_path =
      args.manifest_path.empty() ? args.out_path + ".manifest.json" : args.manifest_path;
  if (std::filesystem::exists(manifest_path)) {
    const json m = json::parse(std::ifstream(manifest_path));
    already_completed = m.value("completed", std::vector<std::string>{});
  }

  const SegSftResult result =
      build_segmentation_sft(problems, generator.get(), segmenter.get(), args.config,
                             VerifierConfig{}, args.seed, already_completed);

  json config{{"problems", args.problems_path},
              {"num_responses", args.config.num_responses},
              {"keep_correct", args.config.keep_correct},
              {"num_segmentations", args.config.num_segmentations},
              {"backend", backend_config_json(args.backend)}};
  std::vector<json> records;
  for (const SegSftRecord& r : result.records) records.push_back(to_json(r));
  write_jsonl(args.out_path, make_header("stepwiser/segmentation-sft", config, args.seed),
              records);
  std::ofstream(manifest_path) << json{{"completed", result.completed_problem_ids}}.dump(2)
                               << "\n";

  std::cout << json{{"records", result.records.size()},
                    {"completed_problems", result.completed_problem_ids.size()},
                    {"out", args.out_path}}
                   .dump()
            << "\n";
  if (result.transport_error) {
    std::cerr << "transport error: " << *result.transport_error << "\n";
    return kExitTransport;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// prefilter

struct PrefilterArgs {
  std::string problems_path;
  std::string out_path;
  int k = 16;
  BackendOptions backend;
  std::uint64_t seed = 0;
};

int run_prefilter(const PrefilterArgs& args) {
  const std::vector<Problem> problems = load_problems(args.problems_path);
  Backend backend = make_backend(args.backend);
  const std::vector<PrefilterEntry> entries =
      prefilter_prompts(problems, backend.get(), args.k, VerifierConfig{}, args.seed);

  json config{{"problems", args.problems_path},
              {"k", args.k},
              {"backend", backend_config_json(args.backend)}};
  std::vector<json> records;
  std::size_t kept = 0;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (!entries[i].error.empty()) {
      ++failed;
      std::cerr << "excluded " << entries[i].problem_id << ": " << entries[i].error << "\n";
      continue;
    }
    if (!entries[i].kept) continue;
    ++kept;
    json r = to_json(problems[i]);
    r["pass_count"] = entries[i].pass_count;
    r["total"] = entries[i].total;
    records.push_back(std::move(r));
  }
  write_jsonl(args.out_path, make_header("stepwiser/problems", config, args.seed), records);
  std::cout << json{{"kept", kept},
                    {"dropped", problems.size() - kept - failed},
                    {"failed", failed},
                    {"out", args.out_path}}
                   .dump()
            << "\n";
  return failed == 0 ? kExitOk : kExitTransport;
}

// ---------------------------------------------------------------------------
// annotate

struct AnnotateArgs {
  std::string problems_path;
  std::string trajectories_path;
  std::string out_path;
  int sim_emit = 0;  // synthesize this many sim trajectories instead of reading
  std::string emit_trajectories_path;
  std::string emit_problems_path;
  bool resume = false;
  BackendOptions backend;
  LabelingConfig labeling;
  std::string strategy = "rel-ratio";
  std::uint64_t seed = 0;
};

int run_annotate(const AnnotateArgs& args) {
  LabelingConfig labeling = args.labeling;
  labeling.strategy = strategy_from_string(args.strategy);

  std::vector<Problem> problems;
  std::vector<Trajectory> trajectories;
  if (args.sim_emit > 0) {
    const Problem problem = make_sim_problem(args.backend.sim, 0);
    problems.push_back(problem);
    for (int i = 0; i < args.sim_emit; ++i) {
      trajectories.push_back(roll_sim_trajectory(args.backend.sim, problem,
                                                 derive_seed(args.seed, {fnv1a64("emit"),
                                                                         std::uint64_t(i)})));
    }
    if (!args.emit_trajectories_path.empty()) {
      std::vector<json> records;
      for (const Trajectory& t : trajectories) records.push_back(to_json(t));
      write_jsonl(args.emit_trajectories_path,
                  make_header("stepwiser/trajectories", backend_config_json(args.backend),
                              args.seed),
                  records);
    }
    if (!args.emit_problems_path.empty()) {
      write_jsonl(args.emit_problems_path,
                  make_header("stepwiser/problems", backend_config_json(args.backend),
                              args.seed),
                  {to_json(problem)});
    }
  } else {
    problems = load_problems(args.problems_path);
    trajectories = load_trajectories(args.trajectories_path);
  }
  const std::map<std::string, Problem> index = problem_index(problems);
  const std::vector<std::string> ids = trajectory_ids(trajectories);

  json config{{"strategy", to_string(labeling.strategy)},
              {"gamma", labeling.gamma},
              {"alpha", labeling.alpha},
              {"best_of_n", labeling.best_of_n},
              {"m", labeling.rollouts_per_step},
              {"backend", backend_config_json(args.backend)}};
  const FileHeader header = make_header("stepwiser/annotation", config, args.seed);

  // Resume: keep records of trajectories whose (problem, step) pairs are all
  // present; everything else is recomputed.
  std::map<std::string, std::vector<json>> done;
  if (args.resume && std::filesystem::exists(args.out_path)) {
    const JsonlFile existing = read_jsonl(args.out_path);
    if (existing.header && existing.header->config_digest != header.config_digest) {
      throw ConfigError("resume config mismatch: the existing output was produced by a "
                        "different configuration");
    }
    std::map<std::string, std::vector<json>> by_trajectory;
    for (const json& r : existing.records) {
      by_trajectory[r.value("trajectory_id", "")].push_back(r);
    }
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      auto it = by_trajectory.find(ids[i]);
      if (it != by_trajectory.end() &&
          it->second.size() == trajectories[i].chunks.size()) {
        done.emplace(ids[i], it->second);
      }
    }
  }

  Backend backend = make_backend(args.backend);
  JsonlWriter writer(args.out_path, header, /*append=*/false);
  std::size_t annotated = 0;
  std::size_t resumed = 0;
  std::vector<std::string> failed;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& trajectory = trajectories[i];
    const auto problem_it = index.find(trajectory.problem_id);
    if (problem_it == index.end()) {
      throw DataError("trajectory references unknown problem: " + trajectory.problem_id);
    }
    if (auto it = done.find(ids[i]); it != done.end()) {
      for (const json& r : it->second) writer.write(r);
      ++resumed;
      continue;
    }
    const std::uint64_t run_seed = derive_seed(args.seed, {fnv1a64(ids[i])});
    try {
      const AnnotatedTrajectory result = annotate_trajectory(
          trajectory, problem_it->second, backend.get(), labeling, VerifierConfig{}, run_seed);
      for (std::size_t s = 0; s < result.labels.size(); ++s) {
        json record = annotation_record_json(trajectory.problem_id, result.labels[s],
                                             result.estimates[s + 1], labeling);
        record["trajectory_id"] = ids[i];
        writer.write(record);
      }
      writer.flush();
      ++annotated;
    } catch (const TransportError& e) {
      failed.push_back(ids[i]);
      std::cerr << "skipped " << ids[i] << ": " << e.what() << "\n";
    }
  }
  std::cout << json{{"annotated", annotated},
                    {"resumed", resumed},
                    {"skipped", failed.size()},
                    {"out", args.out_path}}
                   .dump()
            << "\n";
  return failed.empty() ? kExitOk : kExitTransport;
}

// ---------------------------------------------------------------------------
// build-dataset

struct BuildDatasetArgs {
  std::string problems_path;
  std::string trajectories_path;
  std::string annotations_path;
  std::string out_path;
  std::string rendered_out_path;  // rendered prompts for training-harness handoff
  int min_tokens = 32;
  int max_tokens = 3096;
  std::uint64_t seed = 0;
};

int run_build_dataset(const BuildDatasetArgs& args) {
  const std::vector<Problem> problems = load_problems(args.problems_path);
  const std::vector<Trajectory> trajectories = load_trajectories(args.trajectories_path);
  const std::map<std::string, Problem> index = problem_index(problems);
  const std::vector<std::string> ids = trajectory_ids(trajectories);

  // Collect labels per trajectory from the annotation records.
  std::map<std::string, std::map<int, StepLabel>> labels;
  for (const json& r : read_jsonl(args.annotations_path).records) {
    StepLabel label;
    label.step_index = r.at("step_index").get<int>();
    label.label = label_from_string(r.at("label").get<std::string>());
    label.strategy = strategy_from_string(r.at("strategy").get<std::string>());
    labels[r.value("trajectory_id", "")].emplace(label.step_index, label);
  }

  std::vector<JudgeTask> tasks;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& trajectory = trajectories[i];
    const auto label_it = labels.find(ids[i]);
    if (label_it == labels.end()) continue;  // unannotated trajectory
    if (label_it->second.size() != trajectory.chunks.size()) {
      throw DataError("annotation does not cover trajectory " + ids[i]);
    }
    std::vector<StepLabel> ordered;
    for (std::size_t s = 0; s < trajectory.chunks.size(); ++s) {
      ordered.push_back(label_it->second.at(static_cast<int>(s)));
    }
    const auto problem_it = index.find(trajectory.problem_id);
    if (problem_it == index.end()) {
      throw DataError("trajectory references unknown problem: " + trajectory.problem_id);
    }
    const auto exploded = explode_trajectory(trajectory, problem_it->second, ordered, ids[i]);
    tasks.insert(tasks.end(), exploded.begin(), exploded.end());
  }
  const std::vector<JudgeTask> kept = length_filter(tasks, args.min_tokens, args.max_tokens);

  json config{{"problems", args.problems_path},
              {"trajectories", args.trajectories_path},
              {"annotations", args.annotations_path},
              {"min_prompt_tokens", args.min_tokens},
              {"max_prompt_tokens", args.max_tokens}};
  std::vector<json> records;
  for (const JudgeTask& t : kept) records.push_back(to_json(t));
  write_jsonl(args.out_path, make_header("stepwiser/judge-tasks", config, args.seed), records);
  if (!args.rendered_out_path.empty()) {
    std::vector<json> rendered;
    for (const JudgeTask& t : kept) {
      rendered.push_back({{"task_id", t.trajectory_id + "#" + std::to_string(t.step_index)},
                          {"prompt", render_judge_prompt(t)},
                          {"gold_label", to_string(t.gold_label)}});
    }
    write_jsonl(args.rendered_out_path,
                make_header("stepwiser/rendered-prompts", config, args.seed), rendered);
  }
  std::cout << json{{"tasks", tasks.size()},
                    {"kept", kept.size()},
                    {"out", args.out_path}}
                   .dump()
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// balance

struct BalanceArgs {
  std::string in_path;
  std::string out_path;
  std::uint64_t seed = 0;
};

int run_balance(const BalanceArgs& args) {
  std::vector<JudgeTask> tasks;
  for (const json& r : read_jsonl(args.in_path).records) {
    tasks.push_back(judge_task_from_json(r));
  }
  const auto [balanced, report] = balance(tasks, args.seed);

  json config{{"in", args.in_path}};
  std::vector<json> records;
  for (const JudgeTask& t : balanced) records.push_back(to_json(t));
  write_jsonl(args.out_path, make_header("stepwiser/judge-tasks", config, args.seed), records);
  std::cout << to_json(report).dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// judge-eval

struct JudgeEvalArgs {
  std::string tasks_path;
  std::string out_path;
  std::string verdicts_out_path;
  BackendOptions backend;
  JudgeOptions judge;
  std::uint64_t seed = 0;
};

int run_judge_eval(const JudgeEvalArgs& args) {
  std::vector<JudgeTask> tasks;
  for (const json& r : read_jsonl(args.tasks_path).records) {
    tasks.push_back(judge_task_from_json(r));
  }
  if (tasks.empty()) throw DataError("no tasks in " + args.tasks_path);

  Backend backend = make_backend(args.backend);
  JudgeOptions judge_opts = args.judge;
  judge_opts.seed = args.seed;
  std::unique_ptr<Judge> judge = make_judge(judge_opts, backend.get());

  // One pass collects the per-task verdict records and the accuracies.
  const RewardConfig reward_config;
  std::vector<json> verdict_records;
  std::size_t pos_total = 0, pos_hits = 0, neg_total = 0, neg_hits = 0;
  for (const JudgeTask& task : tasks) {
    const JudgeInput input{task.problem.statement, task.history, task.target_chunk};
    json record{{"task_id", task.trajectory_id + "#" + std::to_string(task.step_index)}};
    Label decided;
    if (args.judge.maj_k == 1) {
      const JudgeVerdict v = judge->judge(input, 0);
      record["parse_status"] = to_string(v.parse_status);
      record["verdict"] = v.ok() ? json(to_string(*v.verdict)) : json(nullptr);
      record["reward"] = reward(v, task.gold_label, reward_config);
      decided = v.ok() ? *v.verdict : Label::Negative;
    } else {
      const MajorityResult majority = majority_judge(*judge, input, args.judge.maj_k);
      record["parse_status"] = majority.all_failed ? "all_failed" : "ok";
      record["verdict"] = to_string(majority.verdict);
      const JudgeVerdict aggregated{majority.verdict, "", ParseStatus::Ok};
      record["reward"] = reward(aggregated, task.gold_label, reward_config);
      decided = majority.verdict;
    }
    verdict_records.push_back(std::move(record));
    const bool hit = decided == task.gold_label;
    if (task.gold_label == Label::Positive) {
      ++pos_total;
      pos_hits += hit ? 1 : 0;
    } else {
      ++neg_total;
      neg_hits += hit ? 1 : 0;
    }
  }
  StepwiseAccuracy accuracy;
  if (pos_total > 0) accuracy.acc_positive = double(pos_hits) / pos_total;
  if (neg_total > 0) accuracy.acc_negative = double(neg_hits) / neg_total;
  accuracy.overall = double(pos_hits + neg_hits) / tasks.size();

  const json config{{"tasks", args.tasks_path},
                    {"judge", args.judge.kind},
                    {"maj_k", args.judge.maj_k},
                    {"backend", backend_config_json(args.backend)}};
  const json summary{{"acc_positive", accuracy.acc_positive},
                     {"acc_negative", accuracy.acc_negative},
                     {"overall", accuracy.overall},
                     {"tasks", tasks.size()},
                     {"maj_k", args.judge.maj_k},
                     {"config", config},
                     {"config_digest", hex_digest(config.dump())},
                     {"seed", args.seed}};
  if (!args.verdicts_out_path.empty()) {
    write_jsonl(args.verdicts_out_path, make_header("stepwiser/verdicts", config, args.seed),
                verdict_records);
  }
  if (!args.out_path.empty()) std::ofstream(args.out_path) << summary.dump(2) << "\n";
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string records_path;
  std::string out_path;
  BackendOptions backend;
  JudgeOptions judge;
  std::uint64_t seed = 0;
};

int run_bench_cmd(const BenchArgs& args) {
  std::vector<BenchRecord> records;
  for (const json& r : read_jsonl(args.records_path).records) {
    records.push_back(bench_record_from_json(r));
  }
  if (records.empty()) throw DataError("no bench records in " + args.records_path);

  Backend backend = make_backend(args.backend);
  JudgeOptions judge_opts = args.judge;
  judge_opts.seed = args.seed;
  std::unique_ptr<Judge> judge = make_judge(judge_opts, backend.get());

  const BenchRunResult result = run_bench(records, *judge, args.judge.maj_k);
  const json config{{"records", args.records_path},
                    {"judge", args.judge.kind},
                    {"maj_k", args.judge.maj_k},
                    {"backend", backend_config_json(args.backend)}};
  const json summary{{"acc_error", result.score.acc_error},
                     {"acc_correct", result.score.acc_correct},
                     {"score", result.score.score},
                     {"evaluated", result.evaluated.size()},
                     {"unevaluated", result.unevaluated},
                     {"maj_k", args.judge.maj_k},
                     {"config", config},
                     {"config_digest", hex_digest(config.dump())},
                     {"seed", args.seed}};
  if (!args.out_path.empty()) std::ofstream(args.out_path) << summary.dump(2) << "\n";
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// search

struct SearchArgs {
  std::string problems_path;
  std::string out_path;
  int episodes = 1;  // per problem
  BackendOptions backend;
  JudgeOptions judge;
  SearchConfig config;
  std::uint64_t seed = 0;
};

int run_search(const SearchArgs& args) {
  std::vector<Problem> problems;
  if (args.problems_path.empty()) {
    if (args.backend.backend != "sim") {
      throw ConfigError("--problems is required unless --backend sim");
    }
    problems.push_back(make_sim_problem(args.backend.sim, 0));
  } else {
    problems = load_problems(args.problems_path);
  }

  Backend backend = make_backend(args.backend);
  JudgeOptions judge_opts = args.judge;
  judge_opts.seed = derive_seed(args.seed, {fnv1a64("judge")});
  std::unique_ptr<Judge> judge = make_judge(judge_opts, backend.get());

  SearchConfig config = args.config;
  config.maj_k = args.judge.maj_k;

  json header_config{{"max_retries", config.max_retries},
                     {"max_chunks", config.max_chunks},
                     {"maj_k", config.maj_k},
                     {"episodes", args.episodes},
                     {"judge", args.judge.kind},
                     {"backend", backend_config_json(args.backend)}};
  const FileHeader header = make_header("stepwiser/search-traces", header_config, args.seed);
  JsonlWriter writer(args.out_path, header, /*append=*/false);

  std::vector<SearchTrace> traces;
  for (const Problem& problem : problems) {
    for (int e = 0; e < args.episodes; ++e) {
      const std::uint64_t episode_seed =
          derive_seed(args.seed, {fnv1a64(problem.id), std::uint64_t(e)});
      GeneratorChunkPolicy policy(backend.get(), episode_seed);
      SearchTrace trace =
          chunk_reset_search(problem, policy, *judge, config, VerifierConfig{});
      json record = to_json(trace);
      record["problem_id"] = problem.id;
      record["episode"] = e;
      writer.write(record);
      traces.push_back(std::move(trace));
    }
    writer.flush();
  }

  const SearchMetrics metrics = search_metrics(traces);
  std::cout << "episodes " << traces.size() << "  accuracy " << metrics.accuracy
            << "  accepted-length " << metrics.mean_accepted_tokens << "  rejected-length "
            << metrics.mean_rejected_tokens << "  forced-accept-rate "
            << metrics.forced_accept_rate << "\n";
  std::cout << json{{"accuracy", metrics.accuracy},
                    {"mean_accepted_tokens", metrics.mean_accepted_tokens},
                    {"mean_rejected_tokens", metrics.mean_rejected_tokens},
                    {"forced_accept_rate", metrics.forced_accept_rate},
                    {"episodes", traces.size()},
                    {"out", args.out_path}}
                   .dump()
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// select

struct SelectArgs {
  std::string candidates_path;
  std::string problems_path;
  std::string out_path;
  BackendOptions backend;
  JudgeOptions judge;
  std::uint64_t seed = 0;
};

int run_select(const SelectArgs& args) {
  const std::vector<Problem> problems = load_problems(args.problems_path);
  const std::map<std::string, Problem> index = problem_index(problems);
  const std::vector<Trajectory> candidates = load_trajectories(args.candidates_path);

  Backend backend = make_backend(args.backend);
  JudgeOptions judge_opts = args.judge;
  judge_opts.seed = args.seed;
  std::unique_ptr<Judge> judge = make_judge(judge_opts, backend.get());

  // Group candidates by problem, preserving file order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<Trajectory>> groups;
  for (const Trajectory& t : candidates) {
    if (groups.find(t.problem_id) == groups.end()) order.push_back(t.problem_id);
    groups[t.problem_id].push_back(t);
  }

  json config{{"candidates", args.candidates_path}, {"judge", args.judge.kind}};
  std::vector<json> records;
  std::size_t selected = 0;
  for (const std::string& problem_id : order) {
    const auto problem_it = index.find(problem_id);
    if (problem_it == index.end()) {
      throw DataError("candidates reference unknown problem: " + problem_id);
    }
    const auto& group = groups[problem_id];
    const std::optional<std::size_t> chosen =
        select_best_response(problem_it->second, group, *judge, args.judge.maj_k);
    json record{{"problem_id", problem_id}, {"num_candidates", group.size()}};
    if (chosen) {
      record["chosen_index"] = *chosen;
      ++selected;
    } else {
      record["chosen_index"] = nullptr;
    }
    records.push_back(std::move(record));
  }
  write_jsonl(args.out_path, make_header("stepwiser/selections", config, args.seed), records);
  std::cout << json{{"problems", order.size()}, {"selected", selected}, {"out", args.out_path}}
                   .dump()
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train-toy

struct TrainToyArgs {
  int num_tasks = 2000;
  int dim = 8;
  GrpoConfig config;
  std::string out_path;
  std::string curves_path;
  std::uint64_t seed = 0;
};

int run_train_toy(const TrainToyArgs& args) {
  GrpoConfig config = args.config;
  config.seed = args.seed;
  const auto tasks =
      make_synth_tasks(args.num_tasks, args.dim, derive_seed(args.seed, {fnv1a64("tasks")}));
  const TrainReport report = train(tasks, config);

  if (!args.out_path.empty()) {
    json out = to_json(report);
    out["config"] = {{"group_size", config.group_size},
                     {"eps_low", config.eps_low},
                     {"eps_high", config.eps_high},
                     {"learning_rate", config.learning_rate},
                     {"batch_size", config.batch_size},
                     {"total_updates", config.total_updates},
                     {"num_tasks", args.num_tasks},
                     {"dim", args.dim}};
    out["config_digest"] = hex_digest(out["config"].dump());
    out["seed"] = args.seed;
    std::ofstream(args.out_path) << out.dump(2) << "\n";
  }
  if (!args.curves_path.empty()) {
    std::ofstream curves(args.curves_path);
    curves << "update,mean_reward,entropy,zero_gradient_fraction\n";
    for (std::size_t i = 0; i < report.mean_reward.size(); ++i) {
      curves << i << "," << report.mean_reward[i] << "," << report.entropy[i] << ","
             << report.zero_gradient_fraction[i] << "\n";
    }
  }
  std::cout << json{{"updates_run", report.updates_run},
                    {"final_holdout_accuracy", report.final_holdout_accuracy},
                    {"final_mean_reward",
                     report.mean_reward.empty() ? 0.0 : report.mean_reward.back()},
                    {"diverged", report.diverged}}
                   .dump()
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report

int run_report(const std::vector<std::string>& inputs) {
  std::optional<int> version;
  json out = json::array();
  for (const std::string& path : inputs) {
    const JsonlFile file = read_jsonl(path);
    if (!file.header) throw DataError("file without stepwiser header: " + path);
    if (version && *version != file.header->schema_version) {
      throw DataError("schema version mismatch: " + path + " has version " +
                      std::to_string(file.header->schema_version) + ", expected " +
                      std::to_string(*version));
    }
    version = file.header->schema_version;

    json entry{{"path", path},
               {"schema", file.header->schema},
               {"schema_version", file.header->schema_version},
               {"config_digest", file.header->config_digest},
               {"seed", file.header->seed},
               {"records", file.records.size()}};
    if (file.header->schema == "stepwiser/trajectories") {
      std::vector<Trajectory> trajectories;
      for (const json& r : file.records) trajectories.push_back(trajectory_from_json(r));
      const CorpusStats stats = corpus_stats(trajectories);
      entry["avg_steps"] = stats.avg_steps;
      entry["avg_tokens"] = stats.avg_tokens;
    } else if (file.header->schema == "stepwiser/judge-tasks") {
      std::size_t positive = 0;
      for (const json& r : file.records) {
        positive += r.at("gold_label").get<std::string>() == "Positive" ? 1 : 0;
      }
      entry["positive"] = positive;
      entry["negative"] = file.records.size() - positive;
    } else if (file.header->schema == "stepwiser/search-traces") {
      std::vector<SearchTrace> traces;
      for (const json& r : file.records) traces.push_back(search_trace_from_json(r));
      const SearchMetrics metrics = search_metrics(traces);
      entry["accuracy"] = metrics.accuracy;
      entry["mean_accepted_tokens"] = metrics.mean_accepted_tokens;
      entry["mean_rejected_tokens"] = metrics.mean_rejected_tokens;
    } else if (file.header->schema == "stepwiser/annotation") {
      std::size_t positive = 0;
      for (const json& r : file.records) {
        positive += r.at("label").get<std::string>() == "Positive" ? 1 : 0;
      }
      entry["positive"] = positive;
      entry["negative"] = file.records.size() - positive;
    }
    out.push_back(std::move(entry));
  }
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stepwise judge pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file; command-line flags win");

  SegmentArgs segment_args;
  auto* segment = app.add_subcommand("segment", "Build segmentation-SFT records");
  segment->add_option("--problems", segment_args.problems_path)->required();
  segment->add_option("--out", segment_args.out_path)->required();
  segment->add_option("--manifest", segment_args.manifest_path);
  segment->add_option("--num-responses", segment_args.config.num_responses)
      ->capture_default_str();
  segment->add_option("--keep-correct", segment_args.config.keep_correct)
      ->capture_default_str();
  segment->add_option("--num-segmentations", segment_args.config.num_segmentations)
      ->capture_default_str();
  segment->add_option("--seed", segment_args.seed)->capture_default_str();
  add_backend_options(segment, segment_args.backend);

  PrefilterArgs prefilter_args;
  auto* prefilter = app.add_subcommand("prefilter", "pass@k prompt prefilter");
  prefilter->add_option("--problems", prefilter_args.problems_path)->required();
  prefilter->add_option("--out", prefilter_args.out_path)->required();
  prefilter->add_option("--k", prefilter_args.k)->capture_default_str();
  prefilter->add_option("--seed", prefilter_args.seed)->capture_default_str();
  add_backend_options(prefilter, prefilter_args.backend);

  AnnotateArgs annotate_args;
  auto* annotate = app.add_subcommand("annotate", "Monte-Carlo step annotation");
  annotate->add_option("--problems", annotate_args.problems_path);
  annotate->add_option("--trajectories", annotate_args.trajectories_path);
  annotate->add_option("--out", annotate_args.out_path)->required();
  annotate->add_option("--sim-emit", annotate_args.sim_emit,
                       "Synthesize this many sim trajectories as input");
  annotate->add_option("--emit-trajectories", annotate_args.emit_trajectories_path,
                       "Also write the synthesized trajectories here");
  annotate->add_option("--emit-problems", annotate_args.emit_problems_path,
                       "Also write the synthesized problem set here");
  annotate->add_flag("--resume", annotate_args.resume);
  annotate->add_option("--strategy", annotate_args.strategy)
      ->check(CLI::IsMember({"abs-q", "rel-effective", "rel-ratio"}))
      ->capture_default_str();
  annotate->add_option("--gamma", annotate_args.labeling.gamma)->capture_default_str();
  annotate->add_option("--alpha", annotate_args.labeling.alpha)->capture_default_str();
  annotate->add_option("--best-of-n", annotate_args.labeling.best_of_n)->capture_default_str();
  annotate->add_option("--m", annotate_args.labeling.rollouts_per_step)->capture_default_str();
  annotate->add_option("--seed", annotate_args.seed)->capture_default_str();
  add_backend_options(annotate, annotate_args.backend);

  BuildDatasetArgs build_args;
  auto* build = app.add_subcommand("build-dataset", "Explode trajectories into judge tasks");
  build->add_option("--problems", build_args.problems_path)->required();
  build->add_option("--trajectories", build_args.trajectories_path)->required();
  build->add_option("--annotations", build_args.annotations_path)->required();
  build->add_option("--out", build_args.out_path)->required();
  build->add_option("--rendered-out", build_args.rendered_out_path,
                    "Also export rendered prompts for a training harness");
  build->add_option("--min-tokens", build_args.min_tokens)->capture_default_str();
  build->add_option("--max-tokens", build_args.max_tokens)->capture_default_str();
  build->add_option("--seed", build_args.seed)->capture_default_str();

  BalanceArgs balance_args;
  auto* balance_cmd = app.add_subcommand("balance", "Down-sample the majority class");
  balance_cmd->add_option("--in", balance_args.in_path)->required();
  balance_cmd->add_option("--out", balance_args.out_path)->required();
  balance_cmd->add_option("--seed", balance_args.seed)->capture_default_str();

  JudgeEvalArgs judge_eval_args;
  auto* judge_eval = app.add_subcommand("judge-eval", "Stepwise accuracy on labeled tasks");
  judge_eval->add_option("--tasks", judge_eval_args.tasks_path)->required();
  judge_eval->add_option("--out", judge_eval_args.out_path);
  judge_eval->add_option("--verdicts-out", judge_eval_args.verdicts_out_path,
                         "Per-task verdict records (task_id, verdict, parse_status, reward)");
  judge_eval->add_option("--seed", judge_eval_args.seed)->capture_default_str();
  add_backend_options(judge_eval, judge_eval_args.backend);
  add_judge_options(judge_eval, judge_eval_args.judge);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "First-error localization benchmark");
  bench->add_option("--records", bench_args.records_path)->required();
  bench->add_option("--out", bench_args.out_path);
  bench->add_option("--seed", bench_args.seed)->capture_default_str();
  add_backend_options(bench, bench_args.backend);
  add_judge_options(bench, bench_args.judge);

  SearchArgs search_args;
  auto* search = app.add_subcommand("search", "Chunk-reset inference-time search");
  search->add_option("--problems", search_args.problems_path);
  search->add_option("--out", search_args.out_path)->required();
  search->add_option("--episodes", search_args.episodes)->capture_default_str();
  search->add_option("--max-retries", search_args.config.max_retries)->capture_default_str();
  search->add_option("--max-chunks", search_args.config.max_chunks)->capture_default_str();
  search->add_option("--seed", search_args.seed)->capture_default_str();
  add_backend_options(search, search_args.backend);
  add_judge_options(search, search_args.judge);

  SelectArgs select_args;
  auto* select = app.add_subcommand("select", "Stepwise rejection-sampling selection");
  select->add_option("--candidates", select_args.candidates_path)->required();
  select->add_option("--problems", select_args.problems_path)->required();
  select->add_option("--out", select_args.out_path)->required();
  select->add_option("--seed", select_args.seed)->capture_default_str();
  add_backend_options(select, select_args.backend);
  add_judge_options(select, select_args.judge);

  TrainToyArgs train_args;
  auto* train_toy = app.add_subcommand("train-toy", "GRPO trainer on synthetic judge tasks");
  train_toy->add_option("--num-tasks", train_args.num_tasks)->capture_default_str();
  train_toy->add_option("--dim", train_args.dim)->capture_default_str();
  train_toy->add_option("--updates", train_args.config.total_updates)->capture_default_str();
  train_toy->add_option("--batch-size", train_args.config.batch_size)->capture_default_str();
  train_toy->add_option("--group-size", train_args.config.group_size)->capture_default_str();
  train_toy->add_option("--eps-low", train_args.config.eps_low)->capture_default_str();
  train_toy->add_option("--eps-high", train_args.config.eps_high)->capture_default_str();
  train_toy->add_option("--lr", train_args.config.learning_rate)->capture_default_str();
  train_toy->add_option("--out", train_args.out_path);
  train_toy->add_option("--curves", train_args.curves_path);
  train_toy->add_option("--seed", train_args.seed)->capture_default_str();

  std::vector<std::string> report_inputs;
  auto* report = app.add_subcommand("report", "Summarize pipeline artifacts");
  report->add_option("--inputs", report_inputs)->required()->expected(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (segment->parsed()) return run_segment(segment_args);
    if (prefilter->parsed()) return run_prefilter(prefilter_args);
    if (annotate->parsed()) return run_annotate(annotate_args);
    if (build->parsed()) return run_build_dataset(build_args);
    if (balance_cmd->parsed()) return run_balance(balance_args);
    if (judge_eval->parsed()) return run_judge_eval(judge_eval_args);
    if (bench->parsed()) return run_bench_cmd(bench_args);
    if (search->parsed()) return run_search(search_args);
    if (select->parsed()) return run_select(select_args);
    if (train_toy->parsed()) return run_train_toy(train_args);
    if (report->parsed()) return run_report(report_inputs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FixtureMissError& e) {
    std::cerr << "fixture miss: " << e.what() << "\n";
    return kExitTransport;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    for (const std::string& line : e.attempts()) std::cerr << "  " << line << "\n";
    return kExitTransport;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
