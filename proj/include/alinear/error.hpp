#pragma once

#include <stdexcept>
#include <string>

namespace alinear {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    ok = 0,
    config_error = 1,
    data_error = 2,
    divergence = 3,
};

/// Invalid configuration or arguments (bad horizon, unknown ablation mode, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Problems with input data: unreadable file, malformed row, series too short.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A non-finite loss, gradient or update. Training cannot continue.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace alinear
