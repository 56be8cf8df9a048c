#pragma once

#include <stdexcept>
#include <string>

namespace nonprob {

// Exit-status categories surfaced by the CLI.
enum class ErrorCode {
  config = 2,
  data = 3,
  estimation = 4,
  resampling = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string tag, const std::string& message)
      : std::runtime_error(tag + ": " + message),
        code_(code),
        tag_(std::move(tag)) {}

  ErrorCode code() const { return code_; }
  const std::string& tag() const { return tag_; }

 private:
  ErrorCode code_;
  std::string tag_;
};

inline Error config_error(const std::string& tag, const std::string& msg) {
  return Error(ErrorCode::config, tag, msg);
}
inline Error data_error(const std::string& tag, const std::string& msg) {
  return Error(ErrorCode::data, tag, msg);
}
inline Error estimation_error(const std::string& tag, const std::string& msg) {
  return Error(ErrorCode::estimation, tag, msg);
}
inline Error resampling_error(const std::string& tag, const std::string& msg) {
  return Error(ErrorCode::resampling, tag, msg);
}

}  // namespace nonprob
