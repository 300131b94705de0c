#pragma once

#include <stdexcept>
#include <string>

namespace ekbl {

enum class ErrorCode { smallness_violated, compat_violated, newton_stagnation, quadrature_fail, invalid_input };

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::smallness_violated: return "SMALLNESS_VIOLATED";
    case ErrorCode::compat_violated: return "COMPAT_VIOLATED";
    case ErrorCode::newton_stagnation: return "NEWTON_STAGNATION";
    case ErrorCode::quadrature_fail: return "QUADRATURE_FAIL";
    case ErrorCode::invalid_input: return "INVALID_INPUT";
  }
  return "UNKNOWN";
}

class SolverError : public std::runtime_error {
 public:
  SolverError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }
  const char* code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace ekbl
