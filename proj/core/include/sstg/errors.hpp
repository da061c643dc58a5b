// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sstg {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Broad families. The CLI maps ConfigError to exit code 2 and DataError to 3.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidShape : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

class ContractViolation : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

class UninitializedState : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidLabel : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class DegenerateDistribution : public Error {
 public:
  using Error::Error;
};

class CorruptCheckpoint : public DataError {
 public:
  CorruptCheckpoint(std::string field, const std::string& what)
      : DataError("corrupt checkpoint [" + field + "]: " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// EDF decoding failure; carries the byte offset and header field that failed.
class ParseError : public DataError {
 public:
  ParseError(std::size_t offset, std::string field, const std::string& what)
      : DataError("parse error at byte " + std::to_string(offset) + " (" + field + "): " + what),
        offset_(offset),
        field_(std::move(field)) {}
  std::size_t offset() const noexcept { return offset_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t offset_;
  std::string field_;
};

class AnnotationError : public DataError {
 public:
  using DataError::DataError;
};

class ChannelNotFound : public DataError {
 public:
  using DataError::DataError;
};

class EmptyDataset : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateSignal : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace sstg
