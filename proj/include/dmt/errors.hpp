#pragma once

#include <stdexcept>
#include <string>

namespace dmt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row/column counts or schema do not match.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A candidate with no observations on one side cannot be evaluated.
class DegenerateCandidateError : public Error {
 public:
  using Error::Error;
};

class IngestionError : public Error {
 public:
  /// line is the 1-based line number in the input file, or -1 if unknown.
  IngestionError(const std::string& what, long line = -1)
      : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dmt
