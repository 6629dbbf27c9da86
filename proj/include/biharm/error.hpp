#pragma once

#include <stdexcept>
#include <string>

namespace biharm {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input outside the documented domain of an operation (usage errors).
class DomainError : public Error {
public:
  using Error::Error;
};

class InvalidSpec : public DomainError {
public:
  using DomainError::DomainError;
};

class DegenerateDomain : public DomainError {
public:
  using DomainError::DomainError;
};

class MeshTooLarge : public DomainError {
public:
  using DomainError::DomainError;
};

class UsageError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Numerical failures: an algorithm ran but could not deliver.
class NumericalError : public Error {
public:
  using Error::Error;
};

class NonConvergence : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class NoOscillation : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class SingularSystem : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class QuadratureError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class PointLocationFailure : public NumericalError {
public:
  PointLocationFailure(const std::string &what, double radius)
      : NumericalError(what), radius_(radius) {}
  double radius() const noexcept { return radius_; }

private:
  double radius_;
};

/// A structural invariant (mesh conformity, mirror symmetry, ...) is broken.
class InvariantViolation : public Error {
public:
  using Error::Error;
};

class AsymmetricMesh : public InvariantViolation {
public:
  using InvariantViolation::InvariantViolation;
};

} // namespace biharm
