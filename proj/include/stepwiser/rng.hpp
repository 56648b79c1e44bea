#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace stepwiser {

// FNV-1a over bytes. Stable across platforms; used for fixture keys,
// config digests, and seed derivation from string ids.
std::uint64_t fnv1a64(std::string_view bytes);

// Hex rendering of fnv1a64, 16 lowercase digits.
std::string hex_digest(std::string_view bytes);

std::uint64_t splitmix64(std::uint64_t x);

// Order-sensitive combiner for seed derivation.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

// Derives a child seed from a root seed and a path of components, e.g.
// derive_seed(run_seed, {fnv1a64(problem_id), step, rollout}).
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> parts);

// Deterministic RNG with canonical double generation. std::mt19937_64 output
// is fully specified by the standard, and the double/bounded-int mappings
// here avoid the unspecified behavior of the standard distributions, so the
// stream is bit-identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53 bits of entropy.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  // Uniform in [0, n), rejection-sampled to remove modulo bias.
  std::size_t next_index(std::size_t n);

  // Standard normal via Box-Muller.
  double next_gaussian();

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stepwiser
