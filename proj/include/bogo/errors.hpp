#pragma once

#include <stdexcept>
#include <string>

namespace bogo {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// bad arguments to a pure function (r = y = 0, y + c <= 0, ...)
struct DomainError : Error { using Error::Error; };
struct SingularGauge : Error { using Error::Error; };
struct GridTooCoarse : Error { using Error::Error; };
struct DegenerateTrace : Error { using Error::Error; };
struct AmbiguousSubspace : Error { using Error::Error; };
struct ZeroSection : Error { using Error::Error; };
struct OddDivisor : Error { using Error::Error; };

// solvers
struct NonConvergence : Error { using Error::Error; };
struct StepRejected : Error { using Error::Error; };
struct PositivityLost : StepRejected { using StepRejected::StepRejected; };

// front end
struct BadConfig : Error { using Error::Error; };
struct UnknownCommand : Error { using Error::Error; };

}  // namespace bogo
