#include "vbm/bundle.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace vbm;

namespace {
constexpr double kPi = std::numbers::pi;

Point circle_pt(double theta) {
    Point p(2);
    p << std::cos(theta), std::sin(theta);
    return p;
}

struct CircleFixture {
    ManifoldModel circle = make_circle();
    VectorBundle mobius = make_mobius_bundle(circle);
    VectorBundle trivial = make_trivial_bundle(circle, 2);
};

// brute-force cocycle oracle, independent of validate_cocycle
double brute_force_cc_residual(const VectorBundle& bundle, int samples) {
    double residual = 0.0;
    const auto& patches = bundle.cocycle.patches;
    for (const auto& pa : patches)
        for (const auto& pb : patches)
            for (const auto& pc : patches) {
                const auto points = sample_overlap({&pa, &pb, &pc}, samples, 1, false);
                for (const auto& y : points) {
                    const Mat lhs = bundle.theta(pb.id, pc.id, y) * bundle.theta(pa.id, pb.id, y);
                    residual =
                        std::max(residual, (lhs - bundle.theta(pa.id, pc.id, y)).cwiseAbs().maxCoeff());
                }
            }
    for (const auto& pa : patches)
        for (const auto& y : sample_overlap({&pa}, samples, 1, false))
            residual = std::max(residual, (bundle.theta(pa.id, pa.id, y) -
                                           Mat::Identity(bundle.rank, bundle.rank))
                                              .cwiseAbs()
                                              .maxCoeff());
    return residual;
}

} // namespace

TEST_CASE("mobius cocycle validates with zero residual") {
    CircleFixture fx;
    CHECK(brute_force_cc_residual(fx.mobius, 256) == 0.0);
    const auto report = validate_cocycle(fx.mobius, 256, 0);
    CHECK(report.pass);
    CHECK(report.max_residual == 0.0);
}

TEST_CASE("trivial bundle cocycle holds identically") {
    CircleFixture fx;
    const auto report = validate_cocycle(fx.trivial, 128, 0);
    CHECK(report.pass);
    CHECK(report.max_residual == 0.0);
}

TEST_CASE("planted three-patch defect is reported at its magnitude") {
    const auto circle = make_circle();
    VectorBundle broken;
    broken.name = "broken";
    broken.base = &circle;
    broken.rank = 1;
    auto arc = [&](int id, std::function<bool(const Point&)> member) {
        CoverPatch patch;
        patch.id = id;
        patch.base = &circle;
        patch.membership = std::move(member);
        for (const auto& c : circle.charts)
            patch.regions.push_back(SampleRegion{c.id, c.sample_lo, c.sample_hi});
        broken.cocycle.patches.push_back(std::move(patch));
    };
    arc(0, [](const Point& p) { return p[1] > -0.5; });
    arc(1, [](const Point& p) { return p[0] < 0.3; });
    arc(2, [](const Point& p) { return p[1] < 0.5; });
    const Mat one = Mat::Identity(1, 1);
    const double defect = 0.25;
    broken.cocycle.add(0, 1, [one](const Point&) { return one; });
    broken.cocycle.add(1, 2, [one](const Point&) { return one; });
    broken.cocycle.add(0, 2, [one, defect](const Point&) { return Mat(one.array() + defect); });

    const auto report = validate_cocycle(broken, 256, 0);
    CHECK(!report.pass);
    CHECK(report.max_residual == doctest::Approx(defect).epsilon(1e-12));
}

TEST_CASE("change_chart flips the mobius fiber on the lower overlap") {
    CircleFixture fx;
    Vec fiber(1);
    fiber << 2.0;
    const BundleElement element{0, circle_pt(3.0 * kPi / 2.0), fiber};
    const BundleElement moved = change_chart(fx.mobius, element, 1);
    CHECK(moved.patch_id == 1);
    CHECK(moved.fiber[0] == -2.0);

    // upper overlap keeps the sign
    const BundleElement upper{0, circle_pt(kPi / 2.0), fiber};
    CHECK(change_chart(fx.mobius, upper, 1).fiber[0] == 2.0);

    // same patch: unchanged
    CHECK(change_chart(fx.mobius, element, 0).fiber[0] == 2.0);

    // roundtrip restores the fiber
    CHECK(change_chart(fx.mobius, moved, 0).fiber[0] == 2.0);
}

TEST_CASE("change_chart requires the overlap") {
    CircleFixture fx;
    Vec fiber(1);
    fiber << 1.0;
    // (1, 0) is excluded from patch 1
    const BundleElement element{0, circle_pt(0.0), fiber};
    CHECK_THROWS_AS((void)change_chart(fx.mobius, element, 1), Error);
}

TEST_CASE("trivialize matches change_chart coordinates") {
    CircleFixture fx;
    Vec fiber(1);
    fiber << -1.25;
    const BundleElement element{0, circle_pt(3.0 * kPi / 2.0), fiber};
    const auto [point, coords] = trivialize(fx.mobius, 1, element);
    CHECK((point - element.base_point).norm() == 0.0);
    CHECK(coords[0] == 1.25);
    // identity on the element's own patch, zero fiber stays zero
    CHECK(trivialize(fx.mobius, 0, element).second[0] == -1.25);
    const BundleElement zero{0, circle_pt(2.0), Vec::Zero(1)};
    CHECK(trivialize(fx.mobius, 1, zero).second.norm() == 0.0);
}

TEST_CASE("fibrewise operations are linear") {
    CircleFixture fx;
    Rng rng(3);
    for (int i = 0; i < 64; ++i) {
        const double theta = rng.uniform(0.2, kPi - 0.2); // upper overlap
        const Point y = circle_pt(theta);
        const Vec u = rng.vector(1, -5, 5), v = rng.vector(1, -5, 5);
        const double a = rng.uniform(-10, 10), b = rng.uniform(-10, 10);
        const BundleElement eu{0, y, u}, ev{0, y, v}, combo{0, y, a * u + b * v};
        const Vec lhs = change_chart(fx.mobius, combo, 1).fiber;
        const Vec rhs = a * change_chart(fx.mobius, eu, 1).fiber + b * change_chart(fx.mobius, ev, 1).fiber;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("inverse consistency of transitions") {
    const auto sphere = make_sphere2();
    const auto ts2 = make_tangent_sphere_bundle(sphere);
    const auto points = sample_overlap({&ts2.patch(0), &ts2.patch(1)}, 64, 5, true);
    for (const auto& y : points) {
        const Mat forward = ts2.theta(0, 1, y);
        const Mat back = ts2.theta(1, 0, y);
        CHECK((forward * back - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("tangent sphere transitions equal finite-difference chart Jacobians") {
    const auto sphere = make_sphere2();
    const auto ts2 = make_tangent_sphere_bundle(sphere);
    const auto points = sample_overlap({&ts2.patch(0), &ts2.patch(1)}, 64, 7, true);
    for (const auto& y : points) {
        const Mat fd = sphere.chart_transition_jacobian(0, 1, sphere.chart(0).to_local(y));
        CHECK((ts2.theta(0, 1, y) - fd).cwiseAbs().maxCoeff() < 1e-5);
    }
    const auto report = validate_cocycle(ts2, 256, 0);
    CHECK(report.pass);
}

TEST_CASE("declared empty overlap raises EmptyOverlapSampling") {
    const auto circle = make_circle();
    VectorBundle bundle;
    bundle.name = "disjoint";
    bundle.base = &circle;
    bundle.rank = 1;
    auto add_patch = [&](int id, double lo, double hi) {
        CoverPatch patch;
        patch.id = id;
        patch.base = &circle;
        patch.membership = [lo, hi](const Point& p) {
            const double a = std::atan2(p[1], p[0]);
            return a > lo && a < hi;
        };
        for (const auto& c : circle.charts)
            patch.regions.push_back(SampleRegion{c.id, c.sample_lo, c.sample_hi});
        bundle.cocycle.patches.push_back(std::move(patch));
    };
    add_patch(0, 0.1, 1.0);
    add_patch(1, 2.0, 3.0); // disjoint from patch 0
    bundle.cocycle.add(0, 1, [](const Point&) { return Mat::Identity(1, 1); });
    try {
        (void)validate_cocycle(bundle, 64, 0);
        FAIL("expected EmptyOverlapSampling");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EmptyOverlapSampling);
    }
}

TEST_CASE("near-singular transitions trip the condition guard") {
    CircleFixture fx;
    VectorBundle bad = fx.trivial;
    bad.cocycle.entries.clear();
    bad.cocycle.add(0, 1, [](const Point&) {
        Mat t(2, 2);
        t << 1.0, 0.0, 0.0, 1e-12;
        return t;
    });
    const auto report = validate_cocycle(bad, 32, 0);
    CHECK(!report.pass);
    // inverting through the guard throws
    const Point y = circle_pt(kPi / 2.0);
    CHECK_THROWS_AS((void)bad.theta(1, 0, y), Error);
}

TEST_CASE("tangent bundles of flat catalog entries are trivial") {
    const auto torus = make_torus2();
    const auto tt = make_tangent_bundle(torus);
    CHECK(tt.rank == 2);
    CHECK(validate_cocycle(tt, 64, 0).pass);
}
