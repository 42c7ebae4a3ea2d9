#pragma once

#include <stdexcept>
#include <string>

namespace introspect {

// Base for every error this library surfaces deliberately. Each contract
// violation named in a module's interface gets its own type so callers can
// catch precisely.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define INTROSPECT_ERROR_TYPE(Name)     \
  struct Name : Error {                 \
    using Error::Error;                 \
  }

// metrics
INTROSPECT_ERROR_TYPE(LabelMismatch);
INTROSPECT_ERROR_TYPE(NonFinite);
INTROSPECT_ERROR_TYPE(ZeroVector);
INTROSPECT_ERROR_TYPE(DimensionMismatch);
INTROSPECT_ERROR_TYPE(EmptyColumn);
INTROSPECT_ERROR_TYPE(NegativeEntry);
INTROSPECT_ERROR_TYPE(ZeroVariance);
INTROSPECT_ERROR_TYPE(LengthMismatch);

// gateway
INTROSPECT_ERROR_TYPE(NetworkError);
INTROSPECT_ERROR_TYPE(RateLimited);
INTROSPECT_ERROR_TYPE(EmptyResponse);
INTROSPECT_ERROR_TYPE(ProviderError);

// dilemma pipeline
INTROSPECT_ERROR_TYPE(ParseError);
INTROSPECT_ERROR_TYPE(GenerationParseError);
INTROSPECT_ERROR_TYPE(JudgeFailure);

// task protocols
INTROSPECT_ERROR_TYPE(OutOfRange);
INTROSPECT_ERROR_TYPE(PredictionParseError);
INTROSPECT_ERROR_TYPE(ConditionFailure);
INTROSPECT_ERROR_TYPE(DuplicateParaphrase);
INTROSPECT_ERROR_TYPE(ChoiceParseError);
INTROSPECT_ERROR_TYPE(ReconstructionParseError);
INTROSPECT_ERROR_TYPE(ClueLeak);
INTROSPECT_ERROR_TYPE(ClueParseError);
INTROSPECT_ERROR_TYPE(GuessParseError);

// cross-model analysis
INTROSPECT_ERROR_TYPE(MissingDiagonal);

// trace analysis
INTROSPECT_ERROR_TYPE(TraceMismatch);
INTROSPECT_ERROR_TYPE(LayerOutOfRange);
INTROSPECT_ERROR_TYPE(PairingError);
INTROSPECT_ERROR_TYPE(ZeroTotalShift);

// run store / config
INTROSPECT_ERROR_TYPE(DuplicateResult);
INTROSPECT_ERROR_TYPE(IncompleteRun);
INTROSPECT_ERROR_TYPE(ConfigError);

#undef INTROSPECT_ERROR_TYPE

}  // namespace introspect
