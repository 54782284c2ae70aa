#include "stash/common.hpp"
#include "stash/error.hpp"

namespace stash {

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) fail(ErrorCode::InvalidArgument, "Rng::below requires n > 0");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Rng Rng::split(std::uint64_t salt) const { return Rng(mix_seed(seed_, salt)); }

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::OrderError: return "OrderError";
    case ErrorCode::EmptyStream: return "EmptyStream";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::UntrainedModel: return "UntrainedModel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownAlpha: return "UnknownAlpha";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::InvalidCount: return "InvalidCount";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::RejectionExhausted: return "RejectionExhausted";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::NoReferencePath: return "NoReferencePath";
    case ErrorCode::ChannelClosed: return "ChannelClosed";
    case ErrorCode::MacMismatch: return "MacMismatch";
    case ErrorCode::TooFewRoutes: return "TooFewRoutes";
    case ErrorCode::InsufficientInstances: return "InsufficientInstances";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

namespace {
std::string decorate(ErrorCode code, const std::string& message, std::size_t line) {
    std::string out(to_string(code));
    if (line != 0) out += " at line " + std::to_string(line);
    out += ": ";
    out += message;
    return out;
}
} // namespace

Error::Error(ErrorCode code, const std::string& message, std::size_t line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

void fail(ErrorCode code, const std::string& message, std::size_t line) {
    throw Error(code, message, line);
}

} // namespace stash
