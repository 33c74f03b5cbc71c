#include "vbm/morph_bundle.hpp"

#include "vbm/expr.hpp"

#include <algorithm>
#include <cmath>

namespace vbm {

SmoothMap project(const MorphElement& element) { return element.base; }
SmoothMap project(const TrivializedPair& pair) { return pair.base; }

TrivializedPair trivialize_T(const SmoothMap& phi, const Connection& connection,
                             const MorphElement& element, const SupportRegion& k, int sample_count,
                             std::uint64_t seed) {
    const SmoothMap& psi = element.base;
    // throws OutsideChartDomain when psi leaves V_phi
    const TangentSection psi_hat = chart_forward(phi, psi, k, sample_count, seed);

    TrivializedPair pair;
    pair.base = psi;
    pair.base_coords = psi_hat;
    pair.fibre_coords.source = element.fibre.source;
    pair.fibre_coords.target =
        std::make_shared<PullbackBundle>(pullback_bundle(*element.fibre.target, phi));

    const auto fibre = std::make_shared<BundleMorphism>(element.fibre);
    const VectorBundle* f_bundle = element.fibre.target;
    const Connection* conn = &connection;

    for (const auto& e_patch : element.fibre.source->cocycle.patches)
        for (const auto& f_patch : f_bundle->cocycle.patches) {
            const int lambda = e_patch.id, alpha = f_patch.id;
            pair.fibre_coords.locals[{lambda, alpha}] =
                [fibre, f_bundle, conn, psi_hat, lambda, alpha,
                 phi_eval = phi.eval](const Point& x) {
                    const TransportResult h = homotopy_transport_map(*conn, psi_hat, x);
                    // Psi's matrix into the transport's end frame, pulled back
                    // through H^{-1} into the reference fibre over phi
                    const Mat a = fibre->local_matrix(lambda, h.end_patch, x);
                    const Mat c_home = h.linear_map.partialPivLu().solve(a);
                    return Mat(f_bundle->theta(h.start_patch, alpha, phi_eval(x)) * c_home);
                };
        }
    return pair;
}

MorphElement detrivialize_T(const SmoothMap& phi, const Connection& connection,
                            const TrivializedPair& pair) {
    if (pair.base_coords.base_map.source != phi.source ||
        pair.base_coords.base_map.target != phi.target)
        fail(Errc::OutsideChartDomain, "pair coordinates are not based at the given chart center");
    const TangentSection& psi_hat = pair.base_coords;
    const SmoothMap psi = chart_inverse(psi_hat);

    MorphElement element;
    element.base = psi;
    element.fibre.source = pair.fibre_coords.source;
    element.fibre.target = pair.fibre_coords.target->source;
    element.fibre.base_map = psi;

    const auto coords = std::make_shared<MorphismOverIdentity>(pair.fibre_coords);
    const VectorBundle* f_bundle = element.fibre.target;
    const Connection* conn = &connection;

    for (const auto& e_patch : element.fibre.source->cocycle.patches)
        for (const auto& f_patch : f_bundle->cocycle.patches) {
            const int lambda = e_patch.id, alpha = f_patch.id;
            element.fibre.locals[{lambda, alpha}] =
                [coords, f_bundle, conn, psi_hat, lambda, alpha,
                 psi_eval = psi.eval](const Point& x) {
                    const TransportResult h = homotopy_transport_map(*conn, psi_hat, x);
                    const Mat c = coords->local_matrix(lambda, h.start_patch, x);
                    const Mat a_end = h.linear_map * c;
                    return Mat(f_bundle->theta(h.end_patch, alpha, psi_eval(x)) * a_end);
                };
        }
    return element;
}

TrivializedPair transition_T(const SmoothMap& phi, const SmoothMap& psi, const Connection& connection,
                             const TrivializedPair& pair_over_psi, int sample_count,
                             std::uint64_t seed) {
    const TangentSection& s = pair_over_psi.base_coords; // chi in psi's chart
    const TangentSection chi_at_phi = chart_change(phi, psi, s, sample_count, seed);

    TrivializedPair pair;
    pair.base = pair_over_psi.base;
    pair.base_coords = chi_at_phi;
    pair.fibre_coords.source = pair_over_psi.fibre_coords.source;
    pair.fibre_coords.target = std::make_shared<PullbackBundle>(
        pullback_bundle(*pair_over_psi.fibre_coords.target->source, phi));

    const auto coords = std::make_shared<MorphismOverIdentity>(pair_over_psi.fibre_coords);
    const VectorBundle* f_bundle = pair.fibre_coords.target->source;
    const Connection* conn = &connection;

    for (const auto& e_patch : pair.fibre_coords.source->cocycle.patches)
        for (const auto& f_patch : f_bundle->cocycle.patches) {
            const int lambda = e_patch.id, alpha = f_patch.id;
            pair.fibre_coords.locals[{lambda, alpha}] =
                [coords, f_bundle, conn, s, chi_at_phi, lambda, alpha,
                 phi_eval = phi.eval](const Point& x) {
                    // Xi's value carried into the common fibre over chi(x),
                    // then back down into the reference fibre over phi
                    const TransportResult h_psi = homotopy_transport_map(*conn, s, x);
                    const TransportResult h_phi = homotopy_transport_map(*conn, chi_at_phi, x);
                    const Mat xi = coords->local_matrix(lambda, h_psi.start_patch, x);
                    Mat at_chi = h_psi.linear_map * xi;
                    if (h_psi.end_patch != h_phi.end_patch)
                        at_chi = f_bundle->theta(h_psi.end_patch, h_phi.end_patch,
                                                 chart_inverse(s)(x)) *
                                 at_chi;
                    const Mat c_home = h_phi.linear_map.partialPivLu().solve(at_chi);
                    return Mat(f_bundle->theta(h_phi.start_patch, alpha, phi_eval(x)) * c_home);
                };
        }
    return pair;
}

FiberMap as_fiber_map(const BundleMorphism& morphism) {
    FiberMap map;
    map.source = morphism.source;
    map.target = morphism.target;
    map.base_map = morphism.base_map;
    const auto inner = std::make_shared<BundleMorphism>(morphism);
    map.eval = [inner](const Point& x, const Vec& u) {
        const BundleElement element{inner->source->canonical_patch(x), x, u};
        const BundleElement out = evaluate(*inner, element);
        const int canonical = inner->target->canonical_patch(out.base_point);
        return Vec(inner->target->theta(out.patch_id, canonical, out.base_point) * out.fiber);
    };
    return map;
}

namespace {

// least n >= 1 with (x, n u) outside the region
int escape_scale(const VerticallyCompactRegion& region, const Point& x, const Vec& u) {
    if (!region.base.inside(x))
        return 1;
    const double norm = u.norm();
    if (norm > 0.0 && std::isfinite(region.fiber_radius)) {
        const double ratio = region.fiber_radius / norm;
        if (ratio < static_cast<double>(1 << 20)) {
            const int n = static_cast<int>(std::floor(ratio)) + 1;
            return std::max(n, 1);
        }
    }
    fail(Errc::NoEscapeScale, "no integer multiple below 2^20 leaves the region; "
                              "the region is not vertically bounded at this sample");
}

} // namespace

RigidityVerdict rigidity_check(const FiberMap& phi_morphism, const FiberMap& psi_morphism,
                               const VerticallyCompactRegion& region, int sample_count,
                               std::uint64_t seed, double tol_alg) {
    RigidityVerdict verdict;
    const ManifoldModel& m = *phi_morphism.base_map.source;
    const int rank = phi_morphism.source->rank;
    Rng rng(seed);
    const double radius = std::isfinite(region.fiber_radius) ? region.fiber_radius : 1.0;

    const auto points = m.sample_points(sample_count, seed);
    verdict.samples = static_cast<int>(points.size());

    for (const auto& x : points) {
        // agreement off the region: outside fibres over every x, outside base
        // points with any fibre
        {
            Vec u = rng.vector(rank, -1.0, 1.0);
            if (u.norm() < 1e-12)
                u.setConstant(1.0);
            if (std::isfinite(region.fiber_radius))
                u *= 1.5 * radius / u.norm();
            if (!region.contains(x, u))
                verdict.off_region_residual = std::max(
                    verdict.off_region_residual, (psi_morphism(x, u) - phi_morphism(x, u)).norm());
        }
        if (!region.base.inside(x)) {
            const Vec u = rng.vector(rank, -radius, radius);
            verdict.off_region_residual = std::max(
                verdict.off_region_residual, (psi_morphism(x, u) - phi_morphism(x, u)).norm());
        }

        // fibrewise linearity of the perturbed morphism
        {
            const Vec u = rng.vector(rank, -radius, radius);
            const Vec w = rng.vector(rank, -radius, radius);
            const double a = rng.uniform(-10.0, 10.0);
            const double b = rng.uniform(-10.0, 10.0);
            const Vec lhs = psi_morphism(x, a * u + b * w);
            const Vec rhs = a * psi_morphism(x, u) + b * psi_morphism(x, w);
            verdict.linearity_residual = std::max(verdict.linearity_residual, (lhs - rhs).norm());
        }

        // the scaling argument on interior samples
        if (region.base.inside(x)) {
            Vec u = rng.vector(rank, -1.0, 1.0);
            if (u.norm() < 1e-12)
                u.setConstant(1.0);
            u *= rng.uniform(0.1, 0.9) * radius / u.norm();
            const int n = escape_scale(region, x, u);
            const double d1 = (psi_morphism(x, u) - phi_morphism(x, u)).norm();
            const double dn =
                (psi_morphism(x, static_cast<double>(n) * u) - phi_morphism(x, static_cast<double>(n) * u))
                    .norm();
            verdict.scaling_identity_residual =
                std::max(verdict.scaling_identity_residual, std::abs(d1 - dn / n));
            verdict.forced_equality_residual = std::max(verdict.forced_equality_residual, d1);
        }
    }

    const double scale_tol = std::max(tol_alg, 1e-7); // linearity probed at coefficient scale 10
    verdict.linear = verdict.linearity_residual < scale_tol;
    verdict.agrees_off_region = verdict.off_region_residual < tol_alg;
    verdict.equal = verdict.forced_equality_residual < tol_alg;
    if (!verdict.linear)
        verdict.violated_hypothesis = "fibrewise linearity";
    else if (!verdict.agrees_off_region)
        verdict.violated_hypothesis = "agreement off the region";
    return verdict;
}

ConstructionReport attempt_compact_perturbation(const BundleMorphism& morphism,
                                                const VerticallyCompactRegion& region,
                                                double magnitude, int sample_count,
                                                std::uint64_t seed) {
    if (magnitude < 0.0)
        fail(Errc::ParameterOutOfRange, "perturbation magnitude must be nonnegative");

    ConstructionReport report;
    report.magnitude = magnitude;
    const FiberMap base = as_fiber_map(morphism);
    const ManifoldModel& m = *morphism.source->base;
    const int f_rank = morphism.target->rank;
    const int e_rank = morphism.source->rank;
    Rng rng(seed);
    const Mat direction = rng.matrix(f_rank, e_rank, -1.0, 1.0);

    // linear candidate supported over the base region
    const SupportRegion& k_base = region.base;
    auto weight = [&](const Point& x) -> double {
        if (!k_base.inside(x))
            return 0.0;
        if (!m.in_chart(k_base.chart_id, x))
            return 0.0;
        const Vec u = m.chart(k_base.chart_id).to_local(x);
        double w = 1.0;
        for (int d = 0; d < u.size(); ++d) {
            if (k_base.box_hi[d] - k_base.box_lo[d] < 1e-12)
                return 0.0;
            w *= expr::bump(u[d], k_base.box_lo[d], k_base.box_hi[d]);
        }
        return w;
    };
    auto perturbation = [&](const Point& x, const Vec& u) -> Vec {
        return magnitude * weight(x) * (direction * u);
    };
    // truncation enforces agreement off the region by fiat
    auto candidate = [&](const Point& x, const Vec& u) -> Vec {
        Vec value = base(x, u);
        if (region.contains(x, u))
            value += perturbation(x, u);
        return value;
    };

    const auto points = m.sample_points(sample_count, seed);
    report.samples = static_cast<int>(points.size());

    bool escaped_somewhere = false;
    for (const auto& x : points) {
        if (!region.base.inside(x))
            continue;
        Vec u = rng.vector(e_rank, -1.0, 1.0);
        if (u.norm() < 1e-12)
            u.setConstant(1.0);
        const double radius = std::isfinite(region.fiber_radius) ? region.fiber_radius : 1.0;
        u *= rng.uniform(0.1, 0.9) * radius / u.norm();

        int n = 0;
        try {
            n = escape_scale(region, x, u);
        } catch (const Error& e) {
            if (e.code() == Errc::NoEscapeScale) {
                report.no_escape = true;
                report.note = e.what();
                continue;
            }
            throw;
        }
        escaped_somewhere = true;

        // what linearity would force at (x, u), given agreement off the region
        const Vec d1 = candidate(x, u) - base(x, u);
        const Vec dn = candidate(x, static_cast<double>(n) * u) - base(x, static_cast<double>(n) * u);
        const Vec forced = dn / static_cast<double>(n);
        report.candidate_violation = std::max(report.candidate_violation, (d1 - forced).norm());
        report.scaling_residual = std::max(report.scaling_residual, forced.norm());
    }

    if (report.no_escape && !escaped_somewhere) {
        report.forced_equality = false;
        report.note = "scaling argument inapplicable: " + report.note;
        return report;
    }
    report.forced_equality = true;
    if (report.note.empty())
        report.note = magnitude == 0.0
                          ? "zero perturbation: candidate already equals the morphism"
                          : "candidate violates fibrewise linearity; enforcing both hypotheses "
                            "collapses the perturbation to zero";
    return report;
}

} // namespace vbm
