#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace exbt {

enum class ErrorCode {
    IoError,
    NoJavaSources,
    UnknownMethod,
    NotATest,
    NotEBT,
    MalformedTrace,
    EmptyAfterExclusion,
    NoThrowAtFrame,
    FrameOutOfSpan,
    UnboundName,
    UnsupportedConstruct,
    DivisionByZero,
    RewriteConflict,
    BackendUnavailable,
    BackendTimeout,
    MalformedResponse,
    RunnerUnavailable,
    ConfigError,
    UsageError,
};

std::string_view error_code_name(ErrorCode code);

/// Pipeline error carrying a stable machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }
    std::string_view code_name() const { return error_code_name(code_); }

private:
    ErrorCode code_;
};

}  // namespace exbt
