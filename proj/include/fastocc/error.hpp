#ifndef FASTOCC_ERROR_HPP
#define FASTOCC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace fastocc {

enum class ErrorKind {
  InvalidParameter,
  InvalidInput,
  IllConditioned,
  Io,
  Config,
  Numerical,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::IllConditioned: return "ill-conditioned";
    case ErrorKind::Io: return "io";
    case ErrorKind::Config: return "config";
    case ErrorKind::Numerical: return "numerical";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fastocc

#endif  // FASTOCC_ERROR_HPP
