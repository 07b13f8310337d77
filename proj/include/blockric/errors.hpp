#pragma once

#include <stdexcept>
#include <string>

namespace blockric {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct NotHermitian : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  using Error::Error;
};

struct SingularMatrix : Error {
  using Error::Error;
};

struct DependentWitnesses : Error {
  using Error::Error;
};

struct CaseEquationFailed : Error {
  using Error::Error;
};

struct ClassificationResidual : Error {
  using Error::Error;
};

struct DegenerateSpectrum : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

}  // namespace blockric
