#pragma once

#include <stdexcept>
#include <string>

namespace surveycast {

// Configuration and validation problems. The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runtime data problems: parse failures, bad values, degenerate inputs.
// The CLI maps these (and any other failure) to exit code 1.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension mismatch between a model and the data handed to it.
struct ShapeError : DataError {
    using DataError::DataError;
};

// An operation was called out of sequence (e.g. backward without forward).
struct StateError : DataError {
    using DataError::DataError;
};

// Optimization diverged.
struct TrainingError : DataError {
    using DataError::DataError;
};

} // namespace surveycast
