#pragma once

#include "vbm/expr.hpp"
#include "vbm/geometry.hpp"

#include <functional>
#include <string>

namespace vbm {

// A smooth map between manifolds, given by an evaluator on embedded
// coordinates. Maps are value types: copy freely, capture no mutable state.
struct SmoothMap {
    const ManifoldModel* source = nullptr;
    const ManifoldModel* target = nullptr;
    std::string name;
    std::function<Point(const Point&)> eval;

    Point operator()(const Point& p) const { return eval(p); }
};

SmoothMap identity_map(const ManifoldModel& m);
SmoothMap constant_map(const ManifoldModel& source, const ManifoldModel& target, Point value);
SmoothMap compose(const SmoothMap& outer, const SmoothMap& inner);

// circle -> circle, theta -> k theta (evaluated polynomially, no branch cuts)
SmoothMap circle_power_map(const ManifoldModel& circle, int k);
// circle -> circle rigid rotation
SmoothMap circle_rotation(const ManifoldModel& circle, double angle);
// circle -> circle, theta -> theta + amplitude * bump(theta, lo, hi); the
// support (lo, hi) must avoid the branch cut at +-pi
SmoothMap circle_bump_rotation(const ManifoldModel& circle, double amplitude, double lo, double hi);
// circle -> sphere2 equator embedding
SmoothMap equator_embedding(const ManifoldModel& circle, const ManifoldModel& sphere);
// sphere2 -> sphere2 rotation about the z axis by amplitude * bump(z, lo, hi);
// compactly supported in the open band lo < z < hi
SmoothMap sphere_band_rotation(const ManifoldModel& sphere, double amplitude, double lo, double hi);
// torus2 -> torus2 rigid shift of both angles
SmoothMap torus_shift(const ManifoldModel& torus, double da, double db);

// map defined by expressions for the target's embedded coordinates in terms
// of x0..x{k-1}, the source's embedded coordinates
SmoothMap expression_map(const ManifoldModel& source, const ManifoldModel& target,
                         std::vector<expr::ExprPtr> components, std::string name);

// sampled sanity probe: images lie near the target manifold's charts and
// finite-difference quotients stay bounded (no blow-up at samples)
bool probe_map(const SmoothMap& map, int sample_count, std::uint64_t seed);

} // namespace vbm
