#include "ragx/errors.hpp"

namespace ragx {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::NoFeatures: return "NoFeatures";
        case ErrorCode::UnknownStrategy: return "UnknownStrategy";
        case ErrorCode::UnknownComparator: return "UnknownComparator";
        case ErrorCode::UnknownBackend: return "UnknownBackend";
        case ErrorCode::NumericError: return "NumericError";
        case ErrorCode::DimensionError: return "DimensionError";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::BackendProtocolError: return "BackendProtocolError";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::IngestError: return "IngestError";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::TemplateError: return "TemplateError";
        case ErrorCode::PreconditionViolation: return "PreconditionViolation";
        case ErrorCode::StaleResult: return "StaleResult";
        case ErrorCode::UndefinedMetric: return "UndefinedMetric";
        case ErrorCode::AnnotationMismatch: return "AnnotationMismatch";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::UsageError: return "UsageError";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::BackendUnavailable:
        case ErrorCode::BackendProtocolError:
            return ErrorCategory::Backend;
        case ErrorCode::UsageError:
        case ErrorCode::UnknownStrategy:
        case ErrorCode::UnknownComparator:
        case ErrorCode::UnknownBackend:
        case ErrorCode::PreconditionViolation:
        case ErrorCode::ConfigError:
            return ErrorCategory::Usage;
        default:
            return ErrorCategory::Data;
    }
}

}  // namespace ragx
