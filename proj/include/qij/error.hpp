#pragma once

#include <stdexcept>
#include <string>

namespace qij {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Design matrix without full column rank (or n < p).
class RankDeficient : public Error {
 public:
  using Error::Error;
};

/// A covariance estimate that is not symmetric positive semidefinite.
class NotPositiveSemidefinite : public Error {
 public:
  using Error::Error;
};

/// Point estimates with zero spread across replications.
class ZeroVariance : public Error {
 public:
  ZeroVariance(std::string method, std::string coefficient)
      : Error("zero variance of point estimates for method '" + method +
              "', coefficient '" + coefficient + "'"),
        method_(std::move(method)),
        coefficient_(std::move(coefficient)) {}

  const std::string& method() const noexcept { return method_; }
  const std::string& coefficient() const noexcept { return coefficient_; }

 private:
  std::string method_;
  std::string coefficient_;
};

/// Input file problems: unreadable, empty, non-numeric cells, missing columns.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace qij
