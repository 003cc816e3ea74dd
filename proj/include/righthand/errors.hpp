#pragma once

#include <stdexcept>
#include <string>

namespace righthand {

// Two failure families, chosen so the CLI can map them onto exit codes:
// DomainError (bad inputs, unsatisfiable requests) -> 2,
// NumericError (algorithmic breakdown at runtime)  -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

#define RIGHTHAND_DOMAIN_ERROR(Name)                        \
    struct Name final : DomainError {                       \
        explicit Name(const std::string& what_arg)          \
            : DomainError(std::string(#Name ": ") + what_arg) {} \
    }

#define RIGHTHAND_NUMERIC_ERROR(Name)                       \
    struct Name final : NumericError {                      \
        explicit Name(const std::string& what_arg)          \
            : NumericError(std::string(#Name ": ") + what_arg) {} \
    }

RIGHTHAND_DOMAIN_ERROR(PoleCollision);
RIGHTHAND_DOMAIN_ERROR(AntipodalPoints);
RIGHTHAND_DOMAIN_ERROR(MixedAmbient);
RIGHTHAND_DOMAIN_ERROR(MalformedCurveFile);
RIGHTHAND_DOMAIN_ERROR(OutOfRangeParameter);
RIGHTHAND_DOMAIN_ERROR(UnknownKey);
RIGHTHAND_DOMAIN_ERROR(MalformedConfig);
RIGHTHAND_DOMAIN_ERROR(EmptyMeasureFamily);
RIGHTHAND_DOMAIN_ERROR(NoPrimitiveAvailable);
RIGHTHAND_DOMAIN_ERROR(NonTransverse);
RIGHTHAND_DOMAIN_ERROR(OrbitsNotDisjoint);
RIGHTHAND_DOMAIN_ERROR(NoRecurrence);
RIGHTHAND_DOMAIN_ERROR(ResolutionTooLarge);

RIGHTHAND_NUMERIC_ERROR(NearSingular);
RIGHTHAND_NUMERIC_ERROR(CurvesIntersect);
RIGHTHAND_NUMERIC_ERROR(DegenerateProjection);
RIGHTHAND_NUMERIC_ERROR(StepUnderflow);
RIGHTHAND_NUMERIC_ERROR(EmbeddingFailure);
RIGHTHAND_NUMERIC_ERROR(Infeasible);
RIGHTHAND_NUMERIC_ERROR(NumericalFailure);

#undef RIGHTHAND_DOMAIN_ERROR
#undef RIGHTHAND_NUMERIC_ERROR

}  // namespace righthand
