#pragma once

#include <stdexcept>
#include <string>

namespace fdi {

enum class ErrorKind {
  invalid_argument,
  format,
  degenerate_grid,
  unstable,
  unsupported,
  degenerate_system,
  io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base exception for the toolkit. `stage` is filled in by the identify
/// pipeline so callers can tell which step failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string stage = {})
      : std::runtime_error(what), kind_(kind), stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorKind kind_;
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace fdi
