#pragma once

#include <stdexcept>
#include <string>

namespace sct {

// File format / parse problems (bad magic, truncated payloads, ...).
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad run configuration (unknown key, unparsable value, inconsistent splits).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A referenced file (checkpoint, volume) does not exist.
struct missing_artifact_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values encountered where the pipeline cannot continue.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace sct
