#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ccest {

enum class ErrorKind {
    Format,       // malformed file contents
    Consistency,  // files disagree with each other
    Validation,   // argument or data violates a precondition
    Config,       // unknown option or method name
    State,        // operation not valid in the current state
    NotFound,
    Conflict,
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

struct FormatError : Error {
    explicit FormatError(const std::string& m) : Error(ErrorKind::Format, m) {}
};
struct ConsistencyError : Error {
    explicit ConsistencyError(const std::string& m) : Error(ErrorKind::Consistency, m) {}
};
struct ValidationError : Error {
    explicit ValidationError(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::Config, m) {}
};
struct StateError : Error {
    explicit StateError(const std::string& m) : Error(ErrorKind::State, m) {}
};
struct NotFoundError : Error {
    explicit NotFoundError(const std::string& m) : Error(ErrorKind::NotFound, m) {}
};
struct ConflictError : Error {
    explicit ConflictError(const std::string& m) : Error(ErrorKind::Conflict, m) {}
};

}  // namespace ccest
