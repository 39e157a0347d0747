#pragma once

#include <stdexcept>
#include <string>

namespace gapscore {

// Bad input: malformed manifests, archives, plant specs, CLI arguments.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ManifestError : InputError {
    using InputError::InputError;
};

struct ArchiveError : InputError {
    using InputError::InputError;
};

// Valid input that cannot be scored: unknown measure, no eligible axis,
// degenerate groups, non-convergence.
struct ScoreError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace gapscore
