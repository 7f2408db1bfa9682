#pragma once

#include <stdexcept>
#include <string>

namespace bowtie {

// Process exit codes used by the command-line front end.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kDivergence = 3,
  kVerdict = 4,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const noexcept = 0;
  virtual const char* kind() const noexcept = 0;
};

class UsageError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kUsage; }
  const char* kind() const noexcept override { return "usage"; }
};

// Missing, malformed, or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kData; }
  const char* kind() const noexcept override { return "data"; }
};

// A checkpoint was paired with a dataset built on a different vocabulary.
class FingerprintError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "fingerprint"; }
};

// Non-finite loss, activation or parameter update.
class DivergenceError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kDivergence; }
  const char* kind() const noexcept override { return "divergence"; }
};

}  // namespace bowtie
