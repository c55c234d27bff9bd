#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ensel {

enum class ErrorKind {
    InvalidArgument,
    Io,
    Parse,
    DuplicateId,
    MissingColumn,
    InvalidRawData,
    InsufficientClassMembers,
    DegenerateFold,
    SingleClassTrainingSet,
    SchemaMismatch,
    SingleClassSample,
    EmptyEnsemble,
    LengthMismatch,
    NoSignificantEnsemble,
    InvalidRepeats,
    DegenerateData,
    InvalidSpec,
    InvalidParams,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace ensel
