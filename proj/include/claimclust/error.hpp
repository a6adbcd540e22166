#pragma once

#include <stdexcept>
#include <string>

namespace claimclust {

// Runtime failure inside a computation (CLI exit code 1).
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Rejected input: malformed files, id mismatches, out-of-range parameters
// (CLI exit code 2).
class InputError : public Error {
  public:
    using Error::Error;
};

}  // namespace claimclust
