#pragma once

#include <stdexcept>
#include <string>

namespace crowddyn {

/// Base class for every recoverable error raised by this library. The CLI
/// maps anything derived from Error to exit code 1 (validation failure);
/// all other exceptions become exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define CROWDDYN_ERROR_TYPE(name)                                      \
    class name final : public Error {                                  \
    public:                                                            \
        explicit name(const std::string& what) : Error(what) {}        \
    }

// Network construction and analysis.
CROWDDYN_ERROR_TYPE(NonStochasticRow);
CROWDDYN_ERROR_TYPE(NegativeWeight);
CROWDDYN_ERROR_TYPE(TooSmall);
CROWDDYN_ERROR_TYPE(WeightOutOfRange);
CROWDDYN_ERROR_TYPE(NotErgodic);

// Shared numeric/domain checks.
CROWDDYN_ERROR_TYPE(LengthMismatch);
CROWDDYN_ERROR_TYPE(EmptyInput);
CROWDDYN_ERROR_TYPE(AllZero);
CROWDDYN_ERROR_TYPE(OutOfRange);
CROWDDYN_ERROR_TYPE(NoConvergence);

// Reduced-model preconditions.
CROWDDYN_ERROR_TYPE(DegenerateGroup);

// Statistics.
CROWDDYN_ERROR_TYPE(Separation);
CROWDDYN_ERROR_TYPE(Singular);
CROWDDYN_ERROR_TYPE(TooFew);
CROWDDYN_ERROR_TYPE(ZeroVariance);

// Simulation.
CROWDDYN_ERROR_TYPE(BadDistributionParams);

// Data ingestion.
CROWDDYN_ERROR_TYPE(SchemaError);
CROWDDYN_ERROR_TYPE(ParseError);
CROWDDYN_ERROR_TYPE(InvariantError);

#undef CROWDDYN_ERROR_TYPE

}  // namespace crowddyn
