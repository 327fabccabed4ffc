#pragma once

#include <stdexcept>
#include <string>

namespace teachctl {

enum class ErrorKind {
  Config,  // invalid or inconsistent configuration
  Input,   // bad argument to a library call (shape mismatch, non-finite value)
  Domain,  // argument outside the mathematical domain of a function
  State,   // operation not permitted in the current state
  Io,      // file system failure
  Data,    // malformed external data (JSON records, checkpoints)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

// CLI exit codes: 0 success, 2 config error, 3 IO error, 4 data error.
int exit_code_for(ErrorKind kind) noexcept;

const char* to_string(ErrorKind kind) noexcept;

}  // namespace teachctl
