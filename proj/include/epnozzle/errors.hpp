#pragma once

#include <stdexcept>
#include <string>

namespace epnozzle {

/// Base class for every failure raised by the solver stack.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// core
class NonPositiveEnthalpy : public Error { using Error::Error; };
class OutOfDomain : public Error { using Error::Error; };
class InvalidParameter : public Error { using Error::Error; };

// background
class SonicDegenerate : public Error { using Error::Error; };
class SonicBreakdown : public Error { using Error::Error; };
class VacuumBreakdown : public Error { using Error::Error; };
class InvalidBracket : public Error { using Error::Error; };

// transport
class StagnationError : public Error { using Error::Error; };

// elliptic
class SingularSystem : public Error { using Error::Error; };
class NonConvergedLinearSolve : public Error { using Error::Error; };

// iteration
class DivergenceError : public Error { using Error::Error; };

// cli / io
class ConfigError : public Error { using Error::Error; };

}  // namespace epnozzle
