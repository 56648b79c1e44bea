#include "stepwiser/jsonl.hpp"

#include <fstream>

#include "stepwiser/errors.hpp"
#include "stepwiser/rng.hpp"

namespace stepwiser {

nlohmann::json to_json(const FileHeader& header) {
  return {{"schema", header.schema},
          {"schema_version", header.schema_version},
          {"config", header.config},
          {"config_digest", header.config_digest},
          {"seed", header.seed}};
}

FileHeader header_from_json(const nlohmann::json& j) {
  FileHeader h;
  h.schema = j.at("schema").get<std::string>();
  h.schema_version = j.at("schema_version").get<int>();
  h.config = j.value("config", nlohmann::json::object());
  h.config_digest = j.value("config_digest", "");
  h.seed = j.value("seed", std::uint64_t{0});
  return h;
}

FileHeader make_header(const std::string& schema, const nlohmann::json& config,
                       std::uint64_t seed) {
  FileHeader h;
  h.schema = schema;
  h.config = config;
  h.config_digest = hex_digest(config.dump());
  h.seed = seed;
  return h;
}

JsonlFile read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  JsonlFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": invalid JSON: " + e.what());
    }
    if (line_no == 1 && j.is_object() && j.contains("schema") && j.contains("schema_version")) {
      file.header = header_from_json(j);
    } else {
      file.records.push_back(std::move(j));
    }
  }
  return file;
}

void write_jsonl(const std::filesystem::path& path, const std::optional<FileHeader>& header,
                 const std::vector<nlohmann::json>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + path.string());
  if (header) out << to_json(*header).dump() << "\n";
  for (const auto& r : records) out << r.dump() << "\n";
  if (!out) throw DataError("write failed: " + path.string());
}

struct JsonlWriter::Impl {
  std::ofstream out;
  std::filesystem::path path;
};

JsonlWriter::JsonlWriter(const std::filesystem::path& path, const FileHeader& header, bool append)
    : impl_(new Impl) {
  impl_->path = path;
  const bool exists = std::filesystem::exists(path) && std::filesystem::file_size(path) > 0;
  impl_->out.open(path, append ? std::ios::app : std::ios::trunc);
  if (!impl_->out) {
    delete impl_;
    throw DataError("cannot write file: " + path.string());
  }
  if (!append || !exists) {
    impl_->out << to_json(header).dump() << "\n";
  }
}

JsonlWriter::~JsonlWriter() { delete impl_; }

void JsonlWriter::write(const nlohmann::json& record) {
  impl_->out << record.dump() << "\n";
  if (!impl_->out) throw DataError("write failed: " + impl_->path.string());
}

void JsonlWriter::flush() { impl_->out.flush(); }

}  // namespace stepwiser
