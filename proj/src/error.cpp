#include "teachctl/error.hpp"

namespace teachctl {

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Io:
      return 3;
    default:
      return 4;
  }
}

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config:
      return "config error";
    case ErrorKind::Input:
      return "input error";
    case ErrorKind::Domain:
      return "domain error";
    case ErrorKind::State:
      return "state error";
    case ErrorKind::Io:
      return "io error";
    case ErrorKind::Data:
      return "data error";
  }
  return "error";
}

}  // namespace teachctl
