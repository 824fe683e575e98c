#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lookback {

// Error taxonomy mirrors the process exit codes used by the CLI and the
// C API status values: 1 runtime failure, 2 config error, 3 infeasible request.
enum class ErrorKind : int { runtime = 1, config = 2, infeasible = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}
[[noreturn]] inline void fail_runtime(const std::string& message) {
  fail(ErrorKind::runtime, message);
}
[[noreturn]] inline void fail_config(const std::string& message) {
  fail(ErrorKind::config, message);
}
[[noreturn]] inline void fail_infeasible(const std::string& message) {
  fail(ErrorKind::infeasible, message);
}

inline void check(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}
inline void check(bool condition, const std::string& message) {
  check(condition, ErrorKind::runtime, message);
}

}  // namespace lookback
