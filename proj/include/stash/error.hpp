#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stash {

enum class ErrorCode {
    ParseError,
    OrderError,
    EmptyStream,
    LengthMismatch,
    InsufficientData,
    DegenerateLabels,
    UntrainedModel,
    InvalidArgument,
    UnknownAlpha,
    EmptyScores,
    InvalidCount,
    EmptyCorpus,
    RejectionExhausted,
    EmptySequence,
    VersionMismatch,
    CorruptFile,
    NoReferencePath,
    ChannelClosed,
    MacMismatch,
    TooFewRoutes,
    InsufficientInstances,
    DegenerateDesign,
    IoError,
    ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every domain failure raised by the library.
/// `line()` is non-zero for errors tied to a position in a text input.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::size_t line = 0);

    ErrorCode code() const noexcept { return code_; }
    std::size_t line() const noexcept { return line_; }

private:
    ErrorCode code_;
    std::size_t line_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message, std::size_t line = 0);

} // namespace stash
