#include "vbm/errors.hpp"

namespace vbm {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::VelocityTooLarge: return "VelocityTooLarge";
    case Errc::ChartEscape: return "ChartEscape";
    case Errc::OutsideDiagonalNeighborhood: return "OutsideDiagonalNeighborhood";
    case Errc::ShootingDiverged: return "ShootingDiverged";
    case Errc::EmptyOverlapSampling: return "EmptyOverlapSampling";
    case Errc::NotInOverlap: return "NotInOverlap";
    case Errc::NotInPatch: return "NotInPatch";
    case Errc::IllConditioned: return "IllConditioned";
    case Errc::BaseMismatch: return "BaseMismatch";
    case Errc::BasePointMismatch: return "BasePointMismatch";
    case Errc::NoCoveringPatch: return "NoCoveringPatch";
    case Errc::IncompatibleLocals: return "IncompatibleLocals";
    case Errc::BaseMapMismatch: return "BaseMapMismatch";
    case Errc::OutsideChartDomain: return "OutsideChartDomain";
    case Errc::ParameterOutOfRange: return "ParameterOutOfRange";
    case Errc::PatchGap: return "PatchGap";
    case Errc::SingularTransport: return "SingularTransport";
    case Errc::NoEscapeScale: return "NoEscapeScale";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnknownFunction: return "UnknownFunction";
    case Errc::UnboundVariable: return "UnboundVariable";
    case Errc::DomainError: return "DomainError";
    case Errc::ParseError: return "ParseError";
    case Errc::UnresolvedReference: return "UnresolvedReference";
    }
    return "UnknownError";
}

} // namespace vbm
