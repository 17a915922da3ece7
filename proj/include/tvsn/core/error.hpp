#pragma once

#include <stdexcept>
#include <string>

namespace tvsn {

enum class ErrorKind {
  Parameter,
  Shape,
  State,
  Io,
  Parse,
  Format,
  Consistency,
  Lookup,
};

// All library failures are reported through this one exception type; the
// kind decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// 0 success, 2 parameter, 3 state/prerequisite, 4 I/O.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::State:
      return 3;
    case ErrorKind::Io:
    case ErrorKind::Parse:
    case ErrorKind::Format:
      return 4;
    default:
      return 2;
  }
}

const char* to_string(ErrorKind kind);

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace tvsn
