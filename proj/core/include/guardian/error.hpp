#pragma once

#include <stdexcept>
#include <string>

namespace guardian {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input vector/matrix dimensions do not match what the callee expects.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain where an operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed model, grid or scenario file.
class ParseError : public Error {
 public:
  using Error::Error;
};

class UnsupportedVersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(int epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

/// Non-finite intermediate bounds during bound propagation.
class BoundExplosionError : public Error {
 public:
  BoundExplosionError(int layer, const std::string& what)
      : Error(what), layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

/// A CBF constraint set is empty at the current step.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace guardian
