#include "tvsn/core/error.hpp"

namespace tvsn {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parameter:
      return "parameter error";
    case ErrorKind::Shape:
      return "shape error";
    case ErrorKind::State:
      return "state error";
    case ErrorKind::Io:
      return "I/O error";
    case ErrorKind::Parse:
      return "parse error";
    case ErrorKind::Format:
      return "format error";
    case ErrorKind::Consistency:
      return "consistency error";
    case ErrorKind::Lookup:
      return "lookup error";
  }
  return "error";
}

}  // namespace tvsn
