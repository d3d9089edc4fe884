#pragma once

#include <stdexcept>
#include <string>

namespace hsrc {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller passed values that violate an operation's preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// File was readable but its content does not match the declared format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Requested train/validation split cannot be drawn from the labeled pixels.
class InfeasibleSplit : public Error {
 public:
  using Error::Error;
};

}  // namespace hsrc
