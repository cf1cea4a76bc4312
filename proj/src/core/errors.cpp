#include "ccest/errors.hpp"

namespace ccest {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Format: return "format";
        case ErrorKind::Consistency: return "consistency";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Config: return "config";
        case ErrorKind::State: return "state";
        case ErrorKind::NotFound: return "not-found";
        case ErrorKind::Conflict: return "conflict";
    }
    return "unknown";
}

}  // namespace ccest
