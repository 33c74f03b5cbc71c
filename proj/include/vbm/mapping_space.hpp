#pragma once

#include "vbm/smooth_map.hpp"

namespace vbm {

// Compact region of the source manifold: a membership predicate together
// with the bounding window it lives in. `whole` marks the entire manifold as
// the region (compact catalog manifolds only).
struct SupportRegion {
    std::function<bool(const Point&)> inside;
    int chart_id = 0;
    Vec box_lo, box_hi;

    static SupportRegion whole(const ManifoldModel& m);
    static SupportRegion chart_box(const ManifoldModel& m, int chart_id, Vec lo, Vec hi);
};

// A compactly supported section of phi!TN: x -> tangent vector at phi(x).
struct TangentSection {
    SmoothMap base_map; // phi
    std::function<TangentVector(const Point&)> values;
    SupportRegion support;

    TangentVector operator()(const Point& x) const { return values(x); }
};

TangentSection scale_section(const TangentSection& section, double factor);

// psi ~ phi relative to K: the maps agree at every sample outside K
bool equivalent_off_compact(const SmoothMap& phi, const SmoothMap& psi, const SupportRegion& k,
                            int sample_count, std::uint64_t seed, double tol_alg = 1e-9);

// membership in the chart domain V_phi: psi ~ phi and (phi(x), psi(x)) stays
// inside the injectivity neighbourhood of the diagonal at every sample
bool in_chart_domain(const SmoothMap& phi, const SmoothMap& psi, const SupportRegion& k,
                     int sample_count = 128, std::uint64_t seed = 0);

// the chart map v_phi: psi -> (x -> log_{phi(x)} psi(x))
TangentSection chart_forward(const SmoothMap& phi, const SmoothMap& psi, const SupportRegion& k,
                             int sample_count = 128, std::uint64_t seed = 0);

// its inverse: x -> exp_{phi(x)} section(x)
SmoothMap chart_inverse(const TangentSection& section);

// psi_t = x -> exp_{phi(x)} (t section(x)); a homotopy from phi to psi
SmoothMap homotopy(const TangentSection& section, double t);

// chart change v_phi o v_psi^{-1} applied to a section based at psi
TangentSection chart_change(const SmoothMap& phi, const SmoothMap& psi, const TangentSection& section,
                            int sample_count = 128, std::uint64_t seed = 0);

} // namespace vbm
