#pragma once

#include <stdexcept>
#include <string>

namespace perfcast {

/// Malformed or inconsistent input: bad files, schema violations, invariant
/// breaches on user-supplied data. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a result (singular system,
/// rank-deficient design). Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace perfcast
