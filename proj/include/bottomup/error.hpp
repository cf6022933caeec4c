#pragma once

#include <stdexcept>
#include <string>

namespace bottomup {

/// Base class for all errors raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violated an operation's precondition (bounds, ranges, dimensions).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An action was applied to an environment whose episode has ended.
class TerminalError : public Error {
 public:
  using Error::Error;
};

/// A remote model returned a structurally invalid response.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A library file or report could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A skill id is unknown or no longer live.
class UnknownSkill : public Error {
 public:
  using Error::Error;
};

}  // namespace bottomup
