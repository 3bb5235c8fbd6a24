#pragma once

#include <stdexcept>
#include <string>

namespace camflow {

// File could not be opened / read / written.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// File opened fine but its contents violate the expected format.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// A synthetic-sequence spec that cannot be materialized (e.g. sprite leaves the frame).
struct SpecError : std::runtime_error {
    explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values encountered where the computation requires finite ones.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Too few samples/matches to determine the requested model.
struct InsufficientDataError : std::runtime_error {
    explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace camflow
