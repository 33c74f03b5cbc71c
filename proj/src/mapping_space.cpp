#include "vbm/mapping_space.hpp"

namespace vbm {

SupportRegion SupportRegion::whole(const ManifoldModel& m) {
    SupportRegion region;
    region.inside = [](const Point&) { return true; };
    region.chart_id = m.charts.front().id;
    region.box_lo = m.charts.front().sample_lo;
    region.box_hi = m.charts.front().sample_hi;
    return region;
}

SupportRegion SupportRegion::chart_box(const ManifoldModel& m, int chart_id, Vec lo, Vec hi) {
    SupportRegion region;
    region.chart_id = chart_id;
    region.box_lo = lo;
    region.box_hi = hi;
    const Chart* chart = &m.chart(chart_id);
    region.inside = [chart, lo = std::move(lo), hi = std::move(hi)](const Point& p) {
        if (!chart->domain_test(p))
            return false;
        const Vec u = chart->to_local(p);
        return (u.array() >= lo.array()).all() && (u.array() <= hi.array()).all();
    };
    return region;
}

TangentSection scale_section(const TangentSection& section, double factor) {
    TangentSection scaled = section;
    scaled.values = [inner = section.values, factor](const Point& x) {
        TangentVector v = inner(x);
        v.components *= factor;
        return v;
    };
    return scaled;
}

bool equivalent_off_compact(const SmoothMap& phi, const SmoothMap& psi, const SupportRegion& k,
                            int sample_count, std::uint64_t seed, double tol_alg) {
    if (phi.source != psi.source || phi.target != psi.target)
        return false;
    const ManifoldModel& n = *phi.target;
    for (const auto& x : phi.source->sample_points(sample_count, seed)) {
        if (k.inside(x))
            continue;
        if (n.distance(phi(x), psi(x)) >= tol_alg)
            return false;
    }
    return true;
}

bool in_chart_domain(const SmoothMap& phi, const SmoothMap& psi, const SupportRegion& k,
                     int sample_count, std::uint64_t seed) {
    if (!equivalent_off_compact(phi, psi, k, sample_count, seed))
        return false;
    const ManifoldModel& n = *phi.target;
    for (const auto& x : phi.source->sample_points(sample_count, seed))
        if (!n.in_injectivity_domain(phi(x), psi(x)))
            return false;
    return true;
}

TangentSection chart_forward(const SmoothMap& phi, const SmoothMap& psi, const SupportRegion& k,
                             int sample_count, std::uint64_t seed) {
    if (!in_chart_domain(phi, psi, k, sample_count, seed))
        fail(Errc::OutsideChartDomain, psi.name + " is not in the chart domain around " + phi.name);
    TangentSection section;
    section.base_map = phi;
    section.support = k;
    const ManifoldModel* n = phi.target;
    section.values = [n, phi = phi.eval, psi = psi.eval](const Point& x) {
        return n->log(phi(x), psi(x));
    };
    return section;
}

SmoothMap chart_inverse(const TangentSection& section) {
    const ManifoldModel* n = section.base_map.target;
    SmoothMap map;
    map.source = section.base_map.source;
    map.target = n;
    map.name = "exp[" + section.base_map.name + "]";
    map.eval = [n, values = section.values](const Point& x) { return n->exp(values(x)); };
    return map;
}

SmoothMap homotopy(const TangentSection& section, double t) {
    if (!(t >= 0.0 && t <= 1.0))
        fail(Errc::ParameterOutOfRange, "homotopy parameter " + std::to_string(t));
    SmoothMap map = chart_inverse(scale_section(section, t));
    map.name = section.base_map.name + "@t=" + std::to_string(t);
    return map;
}

TangentSection chart_change(const SmoothMap& phi, const SmoothMap& psi, const TangentSection& section,
                            int sample_count, std::uint64_t seed) {
    const SmoothMap chi = chart_inverse(section);
    // support of the result: the declared support still works when phi and
    // psi agree off it, otherwise fall back to the whole (compact) manifold
    SupportRegion support = section.support;
    if (!equivalent_off_compact(phi, psi, section.support, sample_count, seed))
        support = SupportRegion::whole(*phi.source);
    return chart_forward(phi, chi, support, sample_count, seed);
}

} // namespace vbm
