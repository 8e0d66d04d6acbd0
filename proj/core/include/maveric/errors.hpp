#pragma once

#include <stdexcept>
#include <string>

namespace maveric {

struct InsufficientHistory : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateStyleHead : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientSpread : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UndefinedCorrelation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace maveric
