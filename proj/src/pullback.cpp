#include "vbm/pullback.hpp"

namespace vbm {

PullbackBundle pullback_bundle(const VectorBundle& f_bundle, const SmoothMap& phi) {
    if (phi.target != f_bundle.base)
        fail(Errc::BaseMismatch, "pullback: map target is not the bundle base");

    PullbackBundle pb;
    pb.source = &f_bundle;
    pb.map = phi;
    pb.bundle.name = phi.name + "!" + f_bundle.name;
    pb.bundle.base = phi.source;
    pb.bundle.rank = f_bundle.rank;

    const ManifoldModel& m = *phi.source;
    std::vector<SampleRegion> base_regions;
    for (const auto& chart : m.charts)
        base_regions.push_back(SampleRegion{chart.id, chart.sample_lo, chart.sample_hi});

    for (const auto& f_patch : f_bundle.cocycle.patches) {
        CoverPatch patch;
        patch.id = f_patch.id;
        patch.base = &m;
        patch.membership = [test = f_patch.membership, eval = phi.eval](const Point& x) {
            return test(eval(x));
        };
        patch.expect_nonempty = false;
        // preimages have no chart of their own; sample through the whole atlas
        patch.regions = base_regions;
        pb.bundle.cocycle.patches.push_back(std::move(patch));
    }
    for (const auto& [key, entry] : f_bundle.cocycle.entries) {
        // a nonempty overlap in N may still have an empty preimage
        pb.bundle.cocycle.add(key.first, key.second,
                              [fn = entry.fn, eval = phi.eval](const Point& x) { return fn(eval(x)); },
                              /*expect_nonempty=*/false);
    }
    return pb;
}

BundleElement phi_shriek(const PullbackBundle& pb, const BundleElement& element) {
    if (!pb.bundle.patch(element.patch_id).contains(element.base_point))
        fail(Errc::NotInPatch, "phi_shriek: base point outside patch " +
                                   std::to_string(element.patch_id));
    return BundleElement{element.patch_id, pb.map(element.base_point), element.fiber};
}

BundleElement phi_shriek_fibre_inverse(const PullbackBundle& pb, const Point& x,
                                       const BundleElement& w) {
    const Point image = pb.map(x);
    if ((image - w.base_point).norm() > 1e-9)
        fail(Errc::BasePointMismatch, "phi_shriek inverse: element does not sit over phi(x)");
    return BundleElement{w.patch_id, x, w.fiber};
}

std::pair<Point, Vec> pullback_trivialization(const PullbackBundle& pb, const VectorBundle* e_bundle,
                                              int lambda, int alpha, const BundleElement& element) {
    const Point& x = element.base_point;
    if (e_bundle && !e_bundle->patch(lambda).contains(x))
        fail(Errc::NotInPatch, "pullback trivialization: base point outside U_lambda");
    if (!pb.bundle.patch(alpha).contains(x) || !pb.bundle.patch(element.patch_id).contains(x))
        fail(Errc::NotInPatch, "pullback trivialization: base point outside the alpha preimage");
    return {x, pb.bundle.theta(element.patch_id, alpha, x) * element.fiber};
}

} // namespace vbm
