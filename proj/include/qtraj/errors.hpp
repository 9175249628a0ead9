#pragma once

#include <stdexcept>
#include <string>

namespace qtraj {

// Guard failures are typed so callers (and the CLI exit-code mapping) can
// tell configuration mistakes from runtime numerical trouble.

struct TruncationError : std::runtime_error {
    explicit TruncationError(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroNormError : std::runtime_error {
    explicit ZeroNormError(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct StepSizeError : std::runtime_error {
    explicit StepSizeError(const std::string& what) : std::runtime_error(what) {}
};

struct MultiChannelUnsupported : std::runtime_error {
    explicit MultiChannelUnsupported(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroGammaError : std::runtime_error {
    explicit ZeroGammaError(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyEnsemble : std::runtime_error {
    explicit EmptyEnsemble(const std::string& what) : std::runtime_error(what) {}
};

struct PositivityError : std::runtime_error {
    explicit PositivityError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateEffect : std::runtime_error {
    explicit DegenerateEffect(const std::string& what) : std::runtime_error(what) {}
};

struct IllConditioned : std::runtime_error {
    explicit IllConditioned(const std::string& what) : std::runtime_error(what) {}
};

// Bad user input (CLI flags, malformed files, precondition violations).
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace qtraj
