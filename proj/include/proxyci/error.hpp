#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace proxyci {

enum class ErrorCode {
  Domain,
  SingularGram,
  DegenerateData,
  DegenerateDiscretization,
  EmptyConditioningSet,
  InsufficientSamples,
  LengthMismatch,
  ZeroTable,
  SparseCell,
  InvalidConfig,
  AlreadyNonsmooth,
  ParseError,
  SpecError,
  ConfigError,
};

inline constexpr std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Domain: return "DomainError";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::DegenerateDiscretization: return "DegenerateDiscretization";
    case ErrorCode::EmptyConditioningSet: return "EmptyConditioningSet";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroTable: return "ZeroTable";
    case ErrorCode::SparseCell: return "SparseCell";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::AlreadyNonsmooth: return "AlreadyNonsmooth";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SpecError: return "SpecError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library. `code()` is machine-readable;
/// `stage()` names the pipeline step when the error came out of proxy_ci_test.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {})
      : std::runtime_error(compose(code, message, stage)),
        code_(code),
        detail_(message),
        stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const { return Error(code_, detail_, std::move(stage)); }

 private:
  static std::string compose(ErrorCode code, const std::string& message, const std::string& stage) {
    std::string out(error_name(code));
    if (!stage.empty()) out += " [" + stage + "]";
    out += ": " + message;
    return out;
  }

  ErrorCode code_;
  std::string detail_;
  std::string stage_;
};

/// True for failures of the statistical pipeline (as opposed to bad input or config).
inline bool is_pipeline_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SingularGram:
    case ErrorCode::DegenerateData:
    case ErrorCode::DegenerateDiscretization:
    case ErrorCode::EmptyConditioningSet:
    case ErrorCode::InsufficientSamples:
    case ErrorCode::LengthMismatch:
    case ErrorCode::ZeroTable:
    case ErrorCode::SparseCell:
      return true;
    default:
      return false;
  }
}

}  // namespace proxyci
