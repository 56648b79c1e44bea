#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace stepwiser {

// Every artifact file starts with a header line carrying the schema name,
// schema version, the effective config that produced the file, and the seed.
struct FileHeader {
  std::string schema;
  int schema_version = 1;
  nlohmann::json config = nlohmann::json::object();
  std::string config_digest;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const FileHeader& header);
FileHeader header_from_json(const nlohmann::json& j);

// Builds a header whose config_digest is the digest of the canonical config dump.
FileHeader make_header(const std::string& schema, const nlohmann::json& config,
                       std::uint64_t seed);

struct JsonlFile {
  std::optional<FileHeader> header;  // present when the first line is a header record
  std::vector<nlohmann::json> records;
};

// Reads a whole JSON-lines file; throws DataError on unreadable/undecodable input.
JsonlFile read_jsonl(const std::filesystem::path& path);

// Writes header (if any) followed by one record per line.
void write_jsonl(const std::filesystem::path& path, const std::optional<FileHeader>& header,
                 const std::vector<nlohmann::json>& records);

// Incremental writer used by resumable stages.
class JsonlWriter {
 public:
  JsonlWriter(const std::filesystem::path& path, const FileHeader& header, bool append);
  ~JsonlWriter();

  void write(const nlohmann::json& record);
  void flush();

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace stepwiser
