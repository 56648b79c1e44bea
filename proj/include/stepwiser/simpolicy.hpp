#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "stepwiser/core.hpp"
#include "stepwiser/provider.hpp"
#include "stepwiser/rng.hpp"

namespace stepwiser {

// Synthetic chunked-reasoning environment with absorbing errors: once an
// erroneous chunk appears, every continuation ends with the wrong final
// answer, so all downstream quantities have closed forms.
struct SimEnvConfig {
  int horizon = 5;        // chunks per solution (H)
  double p_error = 0.2;   // per-chunk error probability
  std::uint64_t seed = 0;
};

struct SimState {
  int emitted = 0;
  bool corrupted = false;  // monotone within a trajectory
};

inline constexpr const char* kSimCorrectAnswer = "1";
inline constexpr const char* kSimWrongAnswer = "0";

Problem make_sim_problem(const SimEnvConfig& config, int index);

struct SimStep {
  Chunk chunk;
  SimState state;  // state after emitting the chunk
};

// Emits the next chunk; erroneous with probability p_error, independently.
// Chunk text encodes its own correctness; the final chunk carries a boxed
// answer that is correct iff the trajectory stayed clean.
SimStep sim_next_chunk(const SimState& state, const SimEnvConfig& config, Rng& rng);

// Exact expected final reward from this state: 0 if corrupted, else
// (1 - p_error)^(H - emitted).
double analytic_q(const SimState& state, const SimEnvConfig& config);

// Parses the correctness marker out of a sim chunk. Throws DataError for
// text that did not come from this environment.
bool sim_chunk_is_error(std::string_view chunk_text);

Label oracle_judge(const Chunk& chunk);
// Flip-noise variant for noisy-judge studies; draws one decision per call.
Label oracle_judge(const Chunk& chunk, double flip_rate, Rng& rng);

// Full H-chunk trajectory with extracted answer and verified outcome.
Trajectory roll_sim_trajectory(const SimEnvConfig& config, const Problem& problem,
                               std::uint64_t seed);

// Reconstructs the environment state from a prefix of sim chunks.
SimState sim_state_from_prefix(std::span<const Chunk> prefix);

// Generation backend over the sim environment. Messages follow the shared
// convention: [user: problem statement] plus an optional trailing assistant
// message holding already-emitted chunks joined by blank lines. A request
// whose stop list contains "\n\n" yields exactly one chunk per sample;
// otherwise each sample runs to the horizon. Sample i of a request with
// seed s is driven by mix64(config.seed, s + i), so responses are pure
// functions of (config, request).
class SimGenerator : public Generator {
 public:
  explicit SimGenerator(SimEnvConfig config) : config_(config) {}

  GenerationResponse generate(const GenerationRequest& request) override;

  const SimEnvConfig& config() const { return config_; }

 private:
  SimEnvConfig config_;
};

}  // namespace stepwiser
