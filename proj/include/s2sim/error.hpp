#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace s2sim {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad value fed to a pure operation (non-positive gain, out-of-order frame, ...).
struct ValidationError : SimError {
    using SimError::SimError;
};

// Turn-taking contract broken (TurnEnd without TurnStart, cancel with no request, ...).
struct ProtocolError : SimError {
    using SimError::SimError;
};

// Event count blew past the configured cap; a self-feeding schedule loop.
struct LivelockError : SimError {
    using SimError::SimError;
};

// A single token exceeded max_chars with no safe place to cut it.
struct OversizeTokenError : SimError {
    using SimError::SimError;
};

// Trace file rejected; line is 1-based.
struct TraceError : SimError {
    std::size_t line;
    TraceError(std::size_t line_no, const std::string& what)
        : SimError("trace line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

struct ConfigError : SimError {
    using SimError::SimError;
};

}  // namespace s2sim
