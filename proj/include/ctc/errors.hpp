#pragma once

#include <stdexcept>
#include <string>

namespace ctc {

/// Bad or inconsistent input data (malformed corpus line, degenerate
/// class distribution, dimension mismatch, ...).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training could not complete (single-class data, accuracy threshold
/// unreachable, divergence).
class TrainError : public std::runtime_error {
public:
    explicit TrainError(const std::string& msg, double best_accuracy = -1.0)
        : std::runtime_error(msg), best_accuracy(best_accuracy) {}

    /// Best training accuracy reached before giving up, or -1 if n/a.
    double best_accuracy;
};

}  // namespace ctc
