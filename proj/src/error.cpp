#include "dynspace/error.hpp"

namespace dynspace {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::Io: return "io";
        case ErrorKind::Format: return "format";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Degenerate: return "degenerate";
        case ErrorKind::Config: return "config";
        case ErrorKind::Checksum: return "checksum";
        case ErrorKind::Locked: return "locked";
        case ErrorKind::Internal: return "internal";
    }
    return "unknown";
}

}  // namespace dynspace
