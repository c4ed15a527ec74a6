#pragma once

#include <stdexcept>
#include <string>

namespace stcl {

enum class ErrorKind { validation, data, numeric };

/// Base of every error the library throws. The kind maps onto a process exit
/// code in the CLI (validation 2, data 3, numeric 4).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

enum class CheckpointFault {
  bad_magic,
  unsupported_version,
  checksum_mismatch,
  config_mismatch,
  malformed,
};

const char* to_string(CheckpointFault fault);

class CheckpointError : public DataError {
 public:
  CheckpointError(CheckpointFault fault, const std::string& what)
      : DataError(std::string(to_string(fault)) + ": " + what), fault_(fault) {}
  CheckpointFault fault() const noexcept { return fault_; }

 private:
  CheckpointFault fault_;
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numeric: return 4;
  }
  return 1;
}

}  // namespace stcl
