#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ioa {

// Every failure the library reports is an ioa::Error carrying one of these
// codes. Callers that need to distinguish failures switch on code().
enum class ErrorCode {
  kDomain,
  kComposition,
  kDivergenceBound,
  kPipelineCycle,
  kIncomparableTypes,
  kProjectionMismatch,
  kUnsafeCast,
  kValueOutsideType,
  kHierarchyError,
  kHierarchyCycle,
  kNondeterministicInput,
  kUncoveredTransition,
  kOperationNotEnabled,
  kBoundExceeded,
  kProtocolError,
  kVocabularyMismatch,
  kRuleConflict,
  kNameMismatch,
  kDanglingBinding,
  kSpec,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the error-name prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace ioa
