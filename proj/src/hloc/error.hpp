#pragma once

#include <stdexcept>
#include <string>

namespace hloc {

enum class ErrorKind {
  Usage,      // bad arguments to an API call
  Schema,     // malformed input document
  Integrity,  // well-formed input that violates a record invariant
  Io,
  Data,       // inputs that cannot support the requested operation
  Config,     // grammar/runtime configuration failure
  Version,    // file written by an incompatible format version
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hloc
