#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace blockflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed textual input. line/col are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg, int line = 0, int col = 0)
      : Error(msg), line(line), col(col) {}
  int line;
  int col;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class ExpandError : public Error {
 public:
  using Error::Error;
};

class MergeConflict : public Error {
 public:
  explicit MergeConflict(const std::string& block)
      : Error("conflicting definitions for block '" + block + "'"), block(block) {}
  std::string block;
};

class EmitError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& msg, std::vector<std::string> suggestions = {})
      : Error(msg), suggestions(std::move(suggestions)) {}
  std::vector<std::string> suggestions;
};

class FlattenError : public Error {
 public:
  using Error::Error;
};

class SizeExceeded : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DegenerateTrajectory : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

class EnvError : public Error {
 public:
  using Error::Error;
};

}  // namespace blockflow
