#pragma once

#include <stdexcept>
#include <string>

namespace imdp {

// Every library error derives from Error so callers (the CLI in particular)
// can map failure classes onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IncompatibleCells : public Error {
 public:
  using Error::Error;
};
class NoSuchRoute : public Error {
 public:
  using Error::Error;
};
class SteppingTerminated : public Error {
 public:
  using Error::Error;
};
class InvalidDecayParams : public Error {
 public:
  using Error::Error;
};
class RosterMismatch : public Error {
 public:
  using Error::Error;
};
class NonStochasticTransitions : public Error {
 public:
  using Error::Error;
};
class EmptyBuffer : public Error {
 public:
  using Error::Error;
};
class SingularMatrix : public Error {
 public:
  using Error::Error;
};
class UnknownAgent : public Error {
 public:
  using Error::Error;
};
class EmptyTraceSet : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace imdp
