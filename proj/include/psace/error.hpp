#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psace {

/// Machine-readable failure categories. The CLI maps these onto exit codes.
enum class ErrorCode {
  parameter_domain,
  empty_arm,
  support,
  ratio_degeneracy,
  undefined_component,
  untestable_model,
  absent_stratum,
  precondition,
  parse,
  config,
  numerical,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parameter_domain: return "parameter_domain";
    case ErrorCode::empty_arm: return "empty_arm";
    case ErrorCode::support: return "support";
    case ErrorCode::ratio_degeneracy: return "ratio_degeneracy";
    case ErrorCode::undefined_component: return "undefined_component";
    case ErrorCode::untestable_model: return "untestable_model";
    case ErrorCode::absent_stratum: return "absent_stratum";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::parse: return "parse";
    case ErrorCode::config: return "config";
    case ErrorCode::numerical: return "numerical";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Input-side problems (bad data, bad flags) versus numerical failures.
  bool is_input_error() const noexcept { return code_ != ErrorCode::numerical; }

 private:
  ErrorCode code_;
};

}  // namespace psace
