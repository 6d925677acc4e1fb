#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fraclap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A discretization is too small for the requested content (modes, degree).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Mesh connectivity is not a closed 2-manifold.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Mesh geometry is degenerate.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// The kernel was evaluated on its diagonal.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not certify its tolerance. Carries the bound
/// that was reached and, when available, the raw data that failed.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double bound,
                std::vector<double> raw = {}, double suggestion = 0.0)
      : Error(what), bound_(bound), raw_(std::move(raw)), suggestion_(suggestion) {}

  double bound() const noexcept { return bound_; }
  const std::vector<double>& raw() const noexcept { return raw_; }
  /// Suggested parameter (image radius, z_max, ...) that would likely pass; 0 if none.
  double suggestion() const noexcept { return suggestion_; }

 private:
  double bound_;
  std::vector<double> raw_;
  double suggestion_;
};

/// Experiment configuration failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Report and golden file (or tolerance manifest) disagree on schema.
class IncompatibilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace fraclap
