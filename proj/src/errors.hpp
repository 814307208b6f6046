#pragma once

#include <stdexcept>
#include <string>

namespace l2t {

// Error taxonomy mirrors the process exit contract: I/O failures exit 1,
// configuration problems exit 2, validation findings exit 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace l2t
