#include "stepwiser/fixtures.hpp"

#include <fstream>

#include "stepwiser/errors.hpp"

namespace stepwiser {

FixtureStore::FixtureStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path FixtureStore::entry_path(const GenerationRequest& request) const {
  return dir_ / (request_digest(request) + ".json");
}

void FixtureStore::record(const GenerationRequest& request, const GenerationResponse& response) {
  const nlohmann::json canonical = canonical_request_json(request);
  const std::filesystem::path path = entry_path(request);
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    nlohmann::json existing = nlohmann::json::parse(in);
    if (existing.at("request") != canonical) {
      throw DataError("fixture digest collision at " + path.string());
    }
  }
  nlohmann::json entry{{"request", canonical}, {"response", to_json(response)}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write fixture: " + path.string());
  out << entry.dump(2) << "\n";
}

GenerationResponse FixtureStore::replay(const GenerationRequest& request) const {
  const std::filesystem::path path = entry_path(request);
  std::ifstream in(path);
  if (!in) {
    throw FixtureMissError("no fixture recorded for request digest " + request_digest(request));
  }
  nlohmann::json entry;
  try {
    entry = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt fixture " + path.string() + ": " + e.what());
  }
  if (entry.at("request") != canonical_request_json(request)) {
    throw DataError("fixture digest collision at " + path.string());
  }
  return response_from_json(entry.at("response"));
}

bool FixtureStore::contains(const GenerationRequest& request) const {
  return std::filesystem::exists(entry_path(request));
}

}  // namespace stepwiser
