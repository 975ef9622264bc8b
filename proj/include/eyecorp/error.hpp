#pragma once

#include <stdexcept>
#include <string>

namespace eyecorp {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that does not satisfy a documented format or precondition
// (malformed TSV, corrupt model file, empty corpus, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace eyecorp
