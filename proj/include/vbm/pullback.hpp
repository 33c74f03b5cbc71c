#pragma once

#include "vbm/bundle.hpp"
#include "vbm/smooth_map.hpp"

namespace vbm {

// The pullback of a bundle F -> N along phi: M -> N. Elements are pairs
// (x, v) with v in the fibre of F over phi(x); fibre coordinates of patch
// alpha are F's alpha-coordinates at phi(x), so the induced cocycle is
// theta composed with phi.
struct PullbackBundle {
    VectorBundle bundle;               // lives over M; patch ids mirror F's
    const VectorBundle* source = nullptr; // F
    SmoothMap map;                     // phi

    const ManifoldModel& base() const { return *bundle.base; }
    int rank() const { return bundle.rank; }
};

PullbackBundle pullback_bundle(const VectorBundle& f_bundle, const SmoothMap& phi);

// the canonical morphism: (x, v) -> (phi(x), v)
BundleElement phi_shriek(const PullbackBundle& pb, const BundleElement& element);

// fibrewise inverse: the unique (x, v) over x mapping to w under phi_shriek
BundleElement phi_shriek_fibre_inverse(const PullbackBundle& pb, const Point& x,
                                       const BundleElement& w);

// trivialization over the refined patch U_lambda^alpha; pass e_bundle when an
// E-cover participates, nullptr for the plain pullback cover
std::pair<Point, Vec> pullback_trivialization(const PullbackBundle& pb, const VectorBundle* e_bundle,
                                              int lambda, int alpha, const BundleElement& element);

} // namespace vbm
