#pragma once

#include <stdexcept>
#include <string>

namespace vbm {

// Failure kinds surfaced by the library. Scenario runners catch Error at
// check boundaries and record the code instead of aborting the run.
enum class Errc {
    // geometry
    VelocityTooLarge,
    ChartEscape,
    OutsideDiagonalNeighborhood,
    ShootingDiverged,
    // bundles
    EmptyOverlapSampling,
    NotInOverlap,
    NotInPatch,
    IllConditioned,
    // pullbacks
    BaseMismatch,
    BasePointMismatch,
    // morphisms
    NoCoveringPatch,
    IncompatibleLocals,
    BaseMapMismatch,
    // mapping space
    OutsideChartDomain,
    ParameterOutOfRange,
    // transport
    PatchGap,
    SingularTransport,
    // rigidity
    NoEscapeScale,
    // expression language
    SyntaxError,
    UnknownFunction,
    UnboundVariable,
    DomainError,
    // scenarios
    ParseError,
    UnresolvedReference,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace vbm
