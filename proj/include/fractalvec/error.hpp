#pragma once

#include <stdexcept>
#include <string>

namespace fv {

enum class ErrorKind {
  invalid_argument,
  level_mismatch,
  resource_limit,
  singular_system,
  config,
  non_convergence,
};

/// Library-wide exception. The kind lets the CLI map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

inline void require_level(int a, int b) {
  if (a != b)
    throw Error(ErrorKind::level_mismatch,
                "level mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace fv
