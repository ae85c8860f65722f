#include "ioa/error.hpp"

namespace ioa {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDomain: return "DomainError";
    case ErrorCode::kComposition: return "CompositionError";
    case ErrorCode::kDivergenceBound: return "DivergenceBound";
    case ErrorCode::kPipelineCycle: return "PipelineCycle";
    case ErrorCode::kIncomparableTypes: return "IncomparableTypes";
    case ErrorCode::kProjectionMismatch: return "ProjectionMismatch";
    case ErrorCode::kUnsafeCast: return "UnsafeCast";
    case ErrorCode::kValueOutsideType: return "ValueOutsideType";
    case ErrorCode::kHierarchyError: return "HierarchyError";
    case ErrorCode::kHierarchyCycle: return "HierarchyCycle";
    case ErrorCode::kNondeterministicInput: return "NondeterministicInput";
    case ErrorCode::kUncoveredTransition: return "UncoveredTransition";
    case ErrorCode::kOperationNotEnabled: return "OperationNotEnabled";
    case ErrorCode::kBoundExceeded: return "BoundExceeded";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kVocabularyMismatch: return "VocabularyMismatch";
    case ErrorCode::kRuleConflict: return "RuleConflict";
    case ErrorCode::kNameMismatch: return "NameMismatch";
    case ErrorCode::kDanglingBinding: return "DanglingBinding";
    case ErrorCode::kSpec: return "SpecError";
  }
  return "Error";
}

}  // namespace ioa
