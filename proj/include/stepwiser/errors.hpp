#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stepwiser {

// Base class for all library errors. Subclasses map onto CLI exit codes:
// ConfigError -> 2, TransportError/ProtocolError -> 3, DataError -> 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Request could not be served after exhausting the retry budget.
// Carries the per-attempt log so failures are diagnosable.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::vector<std::string> attempts)
      : Error(what), attempts_(std::move(attempts)) {}
  explicit TransportError(const std::string& what) : Error(what) {}

  const std::vector<std::string>& attempts() const { return attempts_; }

 private:
  std::vector<std::string> attempts_;
};

// Server answered but the body does not follow the wire protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Replay requested for a request that was never recorded.
class FixtureMissError : public Error {
 public:
  using Error::Error;
};

// Malformed input files, schema violations, impossible data states.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace stepwiser
