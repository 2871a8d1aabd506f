#pragma once

#include <stdexcept>
#include <string>

namespace bunching {

//! Broad failure classes; each maps to one CLI exit code.
enum class ErrorKind
{
  input,       // malformed data, configuration or arguments
  degenerate,  // estimation is not possible on this sample
  unreliable   // a point estimate exists but its inference does not
};

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, std::string code, const std::string& message)
    : std::runtime_error(message)
    , kind_(kind)
    , code_(std::move(code))
  {}

  ErrorKind kind() const noexcept { return kind_; }
  //! Stable machine-readable identifier, e.g. "no_bunched_rows".
  const std::string& code() const noexcept { return code_; }

private:
  ErrorKind kind_;
  std::string code_;
};

inline const char* to_string(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::input:
      return "input";
    case ErrorKind::degenerate:
      return "degenerate";
    case ErrorKind::unreliable:
      return "unreliable";
  }
  return "unknown";
}

inline int exit_code(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::input:
      return 2;
    case ErrorKind::degenerate:
      return 3;
    case ErrorKind::unreliable:
      return 4;
  }
  return 1;
}

[[noreturn]] inline void fail(ErrorKind kind,
                              std::string code,
                              const std::string& message)
{
  throw Error(kind, std::move(code), message);
}

} // namespace bunching
