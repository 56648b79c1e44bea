#pragma once

#include <filesystem>

#include "stepwiser/provider.hpp"

namespace stepwiser {

// Directory of JSON files keyed by the digest of the canonicalized request.
// Each file stores the canonical request next to the response so digest
// collisions are detected instead of silently replayed.
class FixtureStore {
 public:
  explicit FixtureStore(std::filesystem::path dir);

  void record(const GenerationRequest& request, const GenerationResponse& response);
  GenerationResponse replay(const GenerationRequest& request) const;
  bool contains(const GenerationRequest& request) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path entry_path(const GenerationRequest& request) const;
  std::filesystem::path dir_;
};

// Deterministic scripted backend: replays recorded responses, errors loudly
// on any unrecorded request.
class ReplayGenerator : public Generator {
 public:
  explicit ReplayGenerator(std::filesystem::path dir) : store_(std::move(dir)) {}

  GenerationResponse generate(const GenerationRequest& request) override {
    return store_.replay(request);
  }

 private:
  FixtureStore store_;
};

// Pass-through wrapper that records every (request, response) pair.
class RecordingGenerator : public Generator {
 public:
  RecordingGenerator(Generator& inner, std::filesystem::path dir)
      : inner_(inner), store_(std::move(dir)) {}

  GenerationResponse generate(const GenerationRequest& request) override {
    GenerationResponse response = inner_.generate(request);
    store_.record(request, response);
    return response;
  }

 private:
  Generator& inner_;
  FixtureStore store_;
};

}  // namespace stepwiser
