#pragma once

#include "vbm/morphism.hpp"
#include "vbm/transport.hpp"

namespace vbm {

// A point of the bundle Morph(E,F) -> C^inf(M,N): a base map together with a
// morphism covering it.
struct MorphElement {
    SmoothMap base;       // psi
    BundleMorphism fibre; // Psi over psi
};

// Image of a MorphElement under the trivialization over the chart around a
// center map phi: the base map in exponential-chart coordinates plus fibre
// coordinates living in the reference fibre Morph_Id(E, phi!F).
struct TrivializedPair {
    SmoothMap base;                    // psi itself (projection stays exact)
    TangentSection base_coords;        // v_phi(psi)
    MorphismOverIdentity fibre_coords; // valued in phi!F
};

SmoothMap project(const MorphElement& element);
SmoothMap project(const TrivializedPair& pair);

// T^phi(psi, Psi) = (psi, H_{phi,psi}^{-1} applied to the local matrices of
// Psi); the homotopy transport realizes H along t -> exp_{phi(x)}(t psi_hat(x)).
TrivializedPair trivialize_T(const SmoothMap& phi, const Connection& connection,
                             const MorphElement& element, const SupportRegion& k,
                             int sample_count = 128, std::uint64_t seed = 0);

MorphElement detrivialize_T(const SmoothMap& phi, const Connection& connection,
                            const TrivializedPair& pair);

// chart transition for pairs: base coordinates change by the exponential
// chart change, fibre coordinates by H_{phi,chi}^{-1} H_{psi,chi}
TrivializedPair transition_T(const SmoothMap& phi, const SmoothMap& psi, const Connection& connection,
                             const TrivializedPair& pair_over_psi, int sample_count = 128,
                             std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// rigidity of compactly supported perturbations

// Fibre evaluator in canonical frames: fiber coordinates in the lowest
// containing E-patch at x map to coordinates in the lowest containing
// F-patch at phi(x). Admits nonlinear fixtures, unlike BundleMorphism.
struct FiberMap {
    const VectorBundle* source = nullptr;
    const VectorBundle* target = nullptr;
    SmoothMap base_map;
    std::function<Vec(const Point& x, const Vec& u)> eval;

    Vec operator()(const Point& x, const Vec& u) const { return eval(x, u); }
};

FiberMap as_fiber_map(const BundleMorphism& morphism);

// base region times a fibre-norm ball of radius `fiber_radius` (canonical
// coordinates); infinite radius models a region that is not vertically
// compact
struct VerticallyCompactRegion {
    SupportRegion base;
    double fiber_radius = 1.0;

    bool contains(const Point& x, const Vec& u) const {
        return base.inside(x) && u.norm() <= fiber_radius;
    }
};

struct RigidityVerdict {
    bool equal = false;
    bool linear = false;
    bool agrees_off_region = false;
    double linearity_residual = 0.0;
    double off_region_residual = 0.0;
    double scaling_identity_residual = 0.0; // | |d(u)| - |d(nu)|/n |
    double forced_equality_residual = 0.0;  // sup |Psi - Phi| inside the region
    int samples = 0;
    std::string violated_hypothesis; // empty when both hypotheses hold
};

// Enacts the scaling argument: agreement off a vertically compact region
// plus fibrewise linearity force Psi = Phi. Throws NoEscapeScale when no
// integer multiple below 2^20 escapes the region.
RigidityVerdict rigidity_check(const FiberMap& phi_morphism, const FiberMap& psi_morphism,
                               const VerticallyCompactRegion& region, int sample_count,
                               std::uint64_t seed, double tol_alg = 1e-9);

struct ConstructionReport {
    double magnitude = 0.0;
    bool no_escape = false;
    bool forced_equality = false;
    double candidate_violation = 0.0; // linearity break of the truncated candidate
    double scaling_residual = 0.0;    // sup |Psi_final - Phi| after enforcement
    int samples = 0;
    std::string note;
};

// Tries to build a fibrewise-linear Psi != Phi agreeing with Phi off the
// region. The truncated candidate exhibits the contradiction; enforcing both
// hypotheses collapses it back to Phi. Failure to construct is the expected
// outcome.
ConstructionReport attempt_compact_perturbation(const BundleMorphism& morphism,
                                                const VerticallyCompactRegion& region,
                                                double magnitude, int sample_count,
                                                std::uint64_t seed);

} // namespace vbm
