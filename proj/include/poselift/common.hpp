#pragma once

#include <stdexcept>
#include <string>

namespace poselift {

// Error taxonomy. The CLI maps these onto process exit codes, so keep the
// split intact: bad files and malformed inputs are FormatError, numerical or
// geometric preconditions are DataError, dictionary training failures are
// LearnError, and a solver breaking one of its own guarantees is SolverError.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct LearnError : Error {
  using Error::Error;
};

struct SolverError : Error {
  using Error::Error;
};

}  // namespace poselift
