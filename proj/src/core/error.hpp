#pragma once

#include <stdexcept>
#include <string>

namespace eie {

// Error taxonomy shared by the library, the C API and the CLI.
// Numeric values line up with the CLI exit codes.
enum class ErrorCode : int {
  usage = 2,
  io = 3,
  data = 4,
  numeric = 5,
  internal = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorCode::usage, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCode::io, w) {}
};
struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorCode::data, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorCode::numeric, w) {}
};

}  // namespace eie
