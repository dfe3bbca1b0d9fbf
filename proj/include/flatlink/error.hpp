#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flatlink {

enum class ErrorCode {
    io,
    format,
    config,
    usage,
    exec,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure the library reports. The code is what
/// the command line tool prints as the machine-readable error class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(ErrorCode::format, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCode::config, what) {}
};

/// Throws the subclass matching `code`, so callers can add context to a
/// message without losing the type a handler catches on.
[[noreturn]] void throw_error(ErrorCode code, const std::string& what);

} // namespace flatlink
