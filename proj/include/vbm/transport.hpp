#pragma once

#include "vbm/bundle.hpp"
#include "vbm/mapping_space.hpp"

namespace vbm {

// Linear connection on a bundle, given per patch as a matrix of one-forms:
// (base point y, direction w in the patch chart's coordinates) -> rank x rank
// matrix, linear in w. Transport integrates v' = -omega(gamma') v.
struct Connection {
    const VectorBundle* bundle = nullptr;
    std::map<int, std::function<Mat(const Point&, const Vec&)>> forms;

    Mat form(int patch_id, const Point& y, const Vec& w_chart) const;
};

Connection flat_connection(const VectorBundle& bundle);
// Levi-Civita connection of the round metric on the tangent bundle of the
// sphere, in stereographic coordinates
Connection levi_civita_sphere(const VectorBundle& ts2);

// gauge compatibility on overlaps:
//   omega_b = theta omega_a theta^{-1} - (d theta) theta^{-1}
ValidationReport validate_connection(const Connection& connection, int sample_count,
                                     std::uint64_t seed, double tol_ode = 1e-6);

struct TransportResult {
    Mat linear_map; // canonical-patch coordinates at start -> at end
    int start_patch = 0;
    int end_patch = 0;
    std::vector<int> path_patches;
    int step_count = 0;

    Vec apply(const Vec& v) const { return linear_map * v; }
};

// parallel transport along a polyline of base points (one RK4 step per
// segment, transitions applied at patch handoffs); the resulting map takes
// canonical-patch fibre coordinates at the first point to canonical-patch
// coordinates at the last
TransportResult parallel_transport(const Connection& connection, const std::vector<Point>& path);

// the fibre maps of the homotopy isomorphism H_{phi,psi}: phi!F -> psi!F,
// obtained by transporting along t -> exp_{phi(x)}(t section(x)). Zero
// sections short-circuit to the exact identity.
TransportResult homotopy_transport_map(const Connection& connection, const TangentSection& section,
                                       const Point& x, int steps = 128);
Vec homotopy_transport(const Connection& connection, const TangentSection& section, const Point& x,
                       const Vec& fiber, int steps = 128);

} // namespace vbm
