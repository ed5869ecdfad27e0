#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace beamxfer {

enum class ErrorKind {
    InvalidParameter,
    PlacementFailure,
    Parse,
    InvariantViolation,
    Domain,
    ShapeMismatch,
    OutOfRange,
    NonFinite,
    EmptyDataset,
    Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a machine-readable kind so the
// CLI can emit a structured error record.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace beamxfer
