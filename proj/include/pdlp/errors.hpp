#pragma once

#include <stdexcept>
#include <string>

namespace pdlp {

// Base of every library error; the CLI maps these to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PDLP_DEFINE_ERROR(Name)              \
    class Name : public Error {              \
    public:                                  \
        using Error::Error;                  \
    };

PDLP_DEFINE_ERROR(DegenerateMarketError)
PDLP_DEFINE_ERROR(InvalidArgumentError)
PDLP_DEFINE_ERROR(InsolvencyError)
PDLP_DEFINE_ERROR(WithdrawalExceedsAvailable)
PDLP_DEFINE_ERROR(OverRedemption)
PDLP_DEFINE_ERROR(InvalidDiscount)
PDLP_DEFINE_ERROR(UndefinedWeights)
PDLP_DEFINE_ERROR(DegenerateTarget)
PDLP_DEFINE_ERROR(SmoothingFailure)
PDLP_DEFINE_ERROR(SurrogateUnavailable)
PDLP_DEFINE_ERROR(BoundsUnavailable)
PDLP_DEFINE_ERROR(LinearSolveError)
PDLP_DEFINE_ERROR(EigenSolveError)
PDLP_DEFINE_ERROR(BlackBoxFailure)
PDLP_DEFINE_ERROR(InfeasibleRedemption)
PDLP_DEFINE_ERROR(OutOfBand)
PDLP_DEFINE_ERROR(ConfigError)

#undef PDLP_DEFINE_ERROR

} // namespace pdlp
