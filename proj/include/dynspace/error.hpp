#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dynspace {

// Coarse failure categories. The CLI prints the category name as the first
// field of its one-line error message.
enum class ErrorKind {
    InvalidArgument,
    Io,
    Format,
    Shape,
    Numeric,
    Degenerate,
    Config,
    Checksum,
    Locked,
    Internal,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace dynspace
