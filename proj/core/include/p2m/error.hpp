#pragma once

#include <stdexcept>
#include <string>

namespace p2m {

enum class ErrorKind {
  parse,
  validation,
  shape,
  not_found,
  unsupported,
  numeric_domain,
  infeasible,
  calibration,
  io,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so the CLI can map it
/// onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace p2m
