// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace matid {

/// Bad input to a numeric routine (non-positive frequency, angle outside range, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Query outside the hull of a gridded table; no extrapolation is attempted.
class OutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Measured power exceeds what free-space propagation allows.
class InconsistentMeasurement : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The slab coefficient never stays inside the tolerance band below the search ceiling.
class NotSettled : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scene or material table fails validation.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// File written by an incompatible format version.
class VersionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace matid
