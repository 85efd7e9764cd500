#pragma once

#include <stdexcept>

namespace dqmor {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition: bad dimension, empty batch, out-of-range label, ...
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

/// Raw RFF feature vector had (near-)zero norm and cannot become a state.
class DegenerateEncodingError : public Error {
 public:
  using Error::Error;
};

/// Input file rejected; the message carries the path and line number(s).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint file rejected: unknown version, inconsistent dimensions or
/// malformed JSON.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// A brute-force oracle or finite-difference check was asked to run at a
/// size beyond its guard.
class TooLargeError : public Error {
 public:
  using Error::Error;
};

/// Optimization produced a non-finite loss; the message names the epoch and
/// batch where it happened.
class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

}  // namespace dqmor
