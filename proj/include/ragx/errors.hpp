#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ragx {

enum class ErrorCode {
    EmptyInput,
    NoFeatures,
    UnknownStrategy,
    UnknownComparator,
    UnknownBackend,
    NumericError,
    DimensionError,
    BackendUnavailable,
    BackendProtocolError,
    EmptyCorpus,
    IngestError,
    DuplicateId,
    TemplateError,
    PreconditionViolation,
    StaleResult,
    UndefinedMetric,
    AnnotationMismatch,
    ConfigError,
    UsageError,
    NotFound,
    ParseError,
};

// Coarse grouping used for CLI exit codes and HTTP statuses.
enum class ErrorCategory { Usage, Backend, Data };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ragx
