#pragma once

// Error taxonomy shared by the library and the CLI. Precondition violations
// use std::invalid_argument; the types below map onto CLI exit codes
// (usage = 1, data = 2, numeric = 3).

#include <stdexcept>
#include <string>

namespace srmoe {

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing/corrupt files, bad dataset configuration.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values detected during computation.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace srmoe
