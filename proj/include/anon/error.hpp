#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace anon {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input that fails validation (bad config, malformed file, contract
/// violation by the caller). The CLI maps these to exit code 1.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Filesystem or network failure. The CLI maps these to exit code 2.
class IoError : public Error {
public:
  using Error::Error;
};

class EmptyDocument : public ValidationError {
public:
  EmptyDocument() : ValidationError("document is empty") {}
};

class InvalidUtf8 : public ValidationError {
public:
  explicit InvalidUtf8(std::size_t byte_offset)
      : ValidationError("invalid UTF-8 at byte " + std::to_string(byte_offset)) {}
};

class SpanOutOfBounds : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class OverlapError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class InvalidConfig : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class InsufficientCorpus : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class UnknownLabel : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class MissingReplacement : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// The model endpoint could not be reached or timed out. Non-fatal for a
/// pipeline run: the remaining detectors still report.
class DetectorUnavailable : public IoError {
public:
  using IoError::IoError;
};

/// The inference server answered with a payload that breaks the protocol.
class ProtocolViolation : public Error {
public:
  using Error::Error;
};

class NotFound : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class OverlapConflict : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class IntegrityError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Optimistic-concurrency failure: the caller's version token is stale.
class VersionConflict : public Error {
public:
  VersionConflict(unsigned long long expected, unsigned long long actual)
      : Error("version conflict: expected " + std::to_string(expected) + ", project is at " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}
  unsigned long long expected() const noexcept { return expected_; }
  unsigned long long actual() const noexcept { return actual_; }

private:
  unsigned long long expected_;
  unsigned long long actual_;
};

/// Schema violation in a line-oriented input file.
class SchemaError : public ValidationError {
public:
  SchemaError(std::size_t line, const std::string& field, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ", field '" + field + "': " + what),
        line_(line), field_(field) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

private:
  std::size_t line_;
  std::string field_;
};

}  // namespace anon
