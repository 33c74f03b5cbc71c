#include "vbm/smooth_map.hpp"

#include <cmath>

namespace vbm {

SmoothMap identity_map(const ManifoldModel& m) {
    return SmoothMap{&m, &m, "id_" + m.name, [](const Point& p) { return p; }};
}

SmoothMap constant_map(const ManifoldModel& source, const ManifoldModel& target, Point value) {
    return SmoothMap{&source, &target, "const", [value = std::move(value)](const Point&) { return value; }};
}

SmoothMap compose(const SmoothMap& outer, const SmoothMap& inner) {
    if (outer.source != inner.target)
        fail(Errc::BaseMismatch, "compose: inner target differs from outer source");
    return SmoothMap{inner.source, outer.target, outer.name + "." + inner.name,
                     [o = outer.eval, i = inner.eval](const Point& p) { return o(i(p)); }};
}

SmoothMap circle_power_map(const ManifoldModel& circle, int k) {
    // Chebyshev-style recursion on (cos t, sin t) keeps the map polynomial in
    // the embedded coordinates
    return SmoothMap{&circle, &circle, "circle_power(" + std::to_string(k) + ")",
                     [k](const Point& p) {
                         double c = 1.0, s = 0.0;
                         const int n = std::abs(k);
                         for (int i = 0; i < n; ++i) {
                             const double c2 = c * p[0] - s * p[1];
                             s = s * p[0] + c * p[1];
                             c = c2;
                         }
                         Point q(2);
                         q << c, (k < 0 ? -s : s);
                         return q;
                     }};
}

SmoothMap circle_rotation(const ManifoldModel& circle, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return SmoothMap{&circle, &circle, "circle_rotation(" + std::to_string(angle) + ")",
                     [c, s](const Point& p) {
                         Point q(2);
                         q << c * p[0] - s * p[1], s * p[0] + c * p[1];
                         return q;
                     }};
}

SmoothMap circle_bump_rotation(const ManifoldModel& circle, double amplitude, double lo, double hi) {
    return SmoothMap{&circle, &circle, "circle_bump_rotation",
                     [amplitude, lo, hi](const Point& p) {
                         const double theta = std::atan2(p[1], p[0]);
                         const double a = theta + amplitude * expr::bump(theta, lo, hi);
                         Point q(2);
                         q << std::cos(a), std::sin(a);
                         return q;
                     }};
}

SmoothMap equator_embedding(const ManifoldModel& circle, const ManifoldModel& sphere) {
    return SmoothMap{&circle, &sphere, "equator_embedding",
                     [](const Point& p) {
                         Point q(3);
                         q << p[0], p[1], 0.0;
                         return q;
                     }};
}

SmoothMap sphere_band_rotation(const ManifoldModel& sphere, double amplitude, double lo, double hi) {
    return SmoothMap{&sphere, &sphere, "sphere_band_rotation",
                     [amplitude, lo, hi](const Point& p) {
                         const double a = amplitude * expr::bump(p[2], lo, hi);
                         const double c = std::cos(a), s = std::sin(a);
                         Point q(3);
                         q << c * p[0] - s * p[1], s * p[0] + c * p[1], p[2];
                         return q;
                     }};
}

SmoothMap torus_shift(const ManifoldModel& torus, double da, double db) {
    const double ca = std::cos(da), sa = std::sin(da);
    const double cb = std::cos(db), sb = std::sin(db);
    return SmoothMap{&torus, &torus, "torus_shift",
                     [ca, sa, cb, sb](const Point& p) {
                         Point q(4);
                         q << ca * p[0] - sa * p[1], sa * p[0] + ca * p[1],
                             cb * p[2] - sb * p[3], sb * p[2] + cb * p[3];
                         return q;
                     }};
}

SmoothMap expression_map(const ManifoldModel& source, const ManifoldModel& target,
                         std::vector<expr::ExprPtr> components, std::string name) {
    if (static_cast<int>(components.size()) != target.embed_dim)
        fail(Errc::ParseError, "expression map needs " + std::to_string(target.embed_dim) +
                                   " components, got " + std::to_string(components.size()));
    return SmoothMap{&source, &target, std::move(name),
                     [components = std::move(components)](const Point& p) {
                         expr::EvalContext ctx;
                         for (int i = 0; i < p.size(); ++i)
                             ctx.bind("x" + std::to_string(i), p[i]);
                         Point q(static_cast<int>(components.size()));
                         for (std::size_t i = 0; i < components.size(); ++i)
                             q[static_cast<int>(i)] = expr::evaluate(components[i], ctx);
                         return q;
                     }};
}

bool probe_map(const SmoothMap& map, int sample_count, std::uint64_t seed) {
    const auto samples = map.source->sample_points(sample_count, seed);
    for (const auto& x : samples) {
        const Point y = map(x);
        if (!y.allFinite() || y.size() != map.target->embed_dim)
            return false;
        bool in_some_chart = false;
        for (const auto& c : map.target->charts)
            if (c.domain_test(y)) {
                in_some_chart = true;
                break;
            }
        if (!in_some_chart)
            return false;
        // difference quotients along source chart directions stay bounded
        const int cid = map.source->canonical_chart(x);
        const Chart& c = map.source->chart(cid);
        const Vec u = c.to_local(x);
        for (int j = 0; j < map.source->dim; ++j) {
            Vec up = u, dn = u;
            up[j] += 1e-6;
            dn[j] -= 1e-6;
            const Vec dq = (map(c.to_embedded(up)) - map(c.to_embedded(dn))) / 2e-6;
            if (!dq.allFinite() || dq.norm() > 1e6)
                return false;
        }
    }
    return true;
}

} // namespace vbm
