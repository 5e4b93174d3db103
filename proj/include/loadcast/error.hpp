#pragma once

#include <stdexcept>
#include <string>

namespace loadcast {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Tensor/parameter shapes disagree. The message names the offending operand.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Any defect in ingested data (files, series coverage, calendars).
class DataError : public Error {
public:
  using Error::Error;
};

class FileNotFoundError : public DataError {
public:
  explicit FileNotFoundError(const std::string &path)
      : DataError("file not found: " + path), path_(path) {}
  const std::string &path() const noexcept { return path_; }

private:
  std::string path_;
};

class EmptyFileError : public DataError {
public:
  explicit EmptyFileError(const std::string &path)
      : DataError("empty file: " + path) {}
};

/// Malformed row; carries the 1-based line number.
class ParseError : public DataError {
public:
  ParseError(const std::string &path, std::size_t line, const std::string &what)
      : DataError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class DuplicateTimestampError : public DataError {
public:
  using DataError::DataError;
};

class NonMonotoneError : public DataError {
public:
  using DataError::DataError;
};

class ResolutionError : public DataError {
public:
  using DataError::DataError;
};

class IncompleteHourError : public DataError {
public:
  using DataError::DataError;
};

class AlignmentError : public DataError {
public:
  using DataError::DataError;
};

class WeatherGapError : public DataError {
public:
  using DataError::DataError;
};

/// The series does not reach far enough back for the window and lag features.
class InsufficientHistoryError : public DataError {
public:
  using DataError::DataError;
};

/// Run directories that do not cover the same prediction days.
class MismatchedRunsError : public Error {
public:
  using Error::Error;
};

/// Loss became NaN/Inf during training.
class DivergenceError : public Error {
public:
  DivergenceError(std::size_t epoch, std::size_t batch, const std::string &what)
      : Error("training diverged at epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batch) + ": " + what),
        epoch_(epoch), batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

private:
  std::size_t epoch_;
  std::size_t batch_;
};

class NonFiniteGradientError : public Error {
public:
  explicit NonFiniteGradientError(const std::string &param)
      : Error("non-finite gradient in parameter '" + param + "'"), param_(param) {}
  const std::string &parameter() const noexcept { return param_; }

private:
  std::string param_;
};

class CheckpointError : public Error {
public:
  enum class Kind { Io, Version, Schema, CorruptPayload };
  CheckpointError(Kind kind, const std::string &what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

} // namespace loadcast
