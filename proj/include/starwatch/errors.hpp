#pragma once

#include <stdexcept>
#include <string>

namespace starwatch {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or unwritable file / stream.
struct IoError : Error {
  using Error::Error;
};

// Input that parses so badly it is probably the wrong file format.
struct CorruptInputError : Error {
  using Error::Error;
};

struct NotFoundError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Scenario or parameter combinations that cannot be generated.
struct ValidationError : Error {
  using Error::Error;
};

// Exhaustive oracle invoked above its size cap.
struct InstanceTooLargeError : Error {
  using Error::Error;
};

}  // namespace starwatch
