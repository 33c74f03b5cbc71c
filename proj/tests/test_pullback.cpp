#include "vbm/pullback.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace vbm;

namespace {
constexpr double kPi = std::numbers::pi;

struct Fixture {
    ManifoldModel circle = make_circle();
    ManifoldModel sphere = make_sphere2();
    VectorBundle mobius = make_mobius_bundle(circle);
    VectorBundle ts2 = make_tangent_sphere_bundle(sphere);
    SmoothMap dbl = circle_power_map(circle, 2);
    SmoothMap rot = circle_rotation(circle, 0.4);
    SmoothMap id = identity_map(circle);
};

Point circle_pt(double theta) {
    Point p(2);
    p << std::cos(theta), std::sin(theta);
    return p;
}

} // namespace

TEST_CASE("identity pullback reproduces the cocycle pointwise") {
    Fixture fx;
    const PullbackBundle pb = pullback_bundle(fx.mobius, fx.id);
    CHECK(pb.rank() == fx.mobius.rank);
    const auto points = sample_overlap({&fx.mobius.patch(0), &fx.mobius.patch(1)}, 128, 0, true);
    for (const auto& y : points)
        CHECK((pb.bundle.theta(0, 1, y) - fx.mobius.theta(0, 1, y)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant map pulls back constant transitions") {
    Fixture fx;
    const Point target = circle_pt(kPi / 2.0); // in both mobius patches
    const SmoothMap constant = constant_map(fx.circle, fx.circle, target);
    const PullbackBundle pb = pullback_bundle(fx.mobius, constant);
    const auto report = validate_cocycle(pb.bundle, 128, 0);
    CHECK(report.pass);
    const Mat expected = fx.mobius.theta(0, 1, target);
    for (const auto& x : fx.circle.sample_points(32, 1))
        CHECK((pb.bundle.theta(0, 1, x) - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant map to a single-patch point leaves the other preimage empty") {
    Fixture fx;
    // (1, 0) lies only in mobius patch 0; the patch-1 preimage is empty and
    // validation must skip it rather than raise EmptyOverlapSampling
    const SmoothMap constant = constant_map(fx.circle, fx.circle, circle_pt(0.0));
    const PullbackBundle pb = pullback_bundle(fx.mobius, constant);
    const auto report = validate_cocycle(pb.bundle, 64, 0);
    CHECK(report.pass);
}

TEST_CASE("double cover pullback of the mobius bundle validates at zero") {
    Fixture fx;
    const PullbackBundle pb = pullback_bundle(fx.mobius, fx.dbl);
    const auto report = validate_cocycle(pb.bundle, 256, 0);
    CHECK(report.pass);
    CHECK(report.max_residual == 0.0);
}

TEST_CASE("phi_shriek preserves fibre coordinates verbatim") {
    Fixture fx;
    const PullbackBundle pb = pullback_bundle(fx.mobius, fx.dbl);
    Rng rng(4);
    int used = 0;
    for (const auto& x : fx.circle.sample_points(256, 2)) {
        int patch = -1;
        for (const auto& p : pb.bundle.cocycle.patches)
            if (p.contains(x)) {
                patch = p.id;
                break;
            }
        if (patch < 0)
            continue;
        const Vec u = rng.vector(1, -3.0, 3.0);
        const BundleElement element{patch, x, u};
        const BundleElement image = phi_shriek(pb, element);
        CHECK(image.fiber[0] == u[0]);
        // the square commutes: p_F(phi!(x,v)) = phi(p!(x,v))
        CHECK((image.base_point - fx.dbl(x)).norm() == 0.0);
        ++used;
    }
    CHECK(used > 200);
}

TEST_CASE("zero fibre maps to zero fibre") {
    Fixture fx;
    const PullbackBundle pb = pullback_bundle(fx.mobius, fx.rot);
    const BundleElement zero{0, circle_pt(1.0), Vec::Zero(1)};
    CHECK(phi_shriek(pb, zero).fiber.norm() == 0.0);
}

TEST_CASE("fibrewise inverse undoes phi_shriek and is linear") {
    Fixture fx;
    const PullbackBundle pb = pullback_bundle(fx.mobius, fx.dbl);
    Rng rng(9);
    for (const auto& x : fx.circle.sample_points(64, 3)) {
        int patch = -1;
        for (const auto& p : pb.bundle.cocycle.patches)
            if (p.contains(x)) {
                patch = p.id;
                break;
            }
        if (patch < 0)
            continue;
        const Vec u = rng.vector(1, -2.0, 2.0), v = rng.vector(1, -2.0, 2.0);
        const double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5);
        const BundleElement element{patch, x, u};
        const BundleElement back = phi_shriek_fibre_inverse(pb, x, phi_shriek(pb, element));
        CHECK(back.patch_id == element.patch_id);
        CHECK((back.fiber - element.fiber).norm() == 0.0);

        // linearity of the inverse
        const BundleElement w1{patch, fx.dbl(x), u}, w2{patch, fx.dbl(x), v};
        BundleElement combo = w1;
        combo.fiber = a * u + b * v;
        const Vec lhs = phi_shriek_fibre_inverse(pb, x, combo).fiber;
        const Vec rhs = a * phi_shriek_fibre_inverse(pb, x, w1).fiber +
                        b * phi_shriek_fibre_inverse(pb, x, w2).fiber;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("fibrewise inverse rejects mismatched base points") {
    Fixture fx;
    const PullbackBundle pb = pullback_bundle(fx.mobius, fx.dbl);
    const BundleElement w{0, circle_pt(0.7), Vec::Ones(1)};
    try {
        (void)phi_shriek_fibre_inverse(pb, circle_pt(1.9), w);
        FAIL("expected BasePointMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::BasePointMismatch);
    }
}

TEST_CASE("constant map inverse recovers fibre coordinates unchanged") {
    Fixture fx;
    const Point y0 = circle_pt(kPi / 2.0);
    const SmoothMap constant = constant_map(fx.circle, fx.circle, y0);
    const PullbackBundle pb = pullback_bundle(fx.mobius, constant);
    Vec w(1);
    w << 1.5;
    const BundleElement at_target{0, y0, w};
    for (const auto& x : fx.circle.sample_points(16, 4))
        CHECK(phi_shriek_fibre_inverse(pb, x, at_target).fiber[0] == 1.5);
}

TEST_CASE("trivialized pullback morphism is the identity on fibres") {
    Fixture fx;
    const PullbackBundle pb = pullback_bundle(fx.mobius, fx.dbl);
    Rng rng(6);
    int used = 0;
    for (const auto& x : fx.circle.sample_points(256, 5)) {
        for (const auto& e_patch : fx.mobius.cocycle.patches) {
            if (!e_patch.contains(x))
                continue;
            for (const auto& pb_patch : pb.bundle.cocycle.patches) {
                if (!pb_patch.contains(x))
                    continue;
                const Vec u = rng.vector(1, -2.0, 2.0);
                const BundleElement element{pb_patch.id, x, u};
                const auto [base, coords] =
                    pullback_trivialization(pb, &fx.mobius, e_patch.id, pb_patch.id, element);
                CHECK((base - x).norm() == 0.0);
                CHECK((coords - u).norm() == 0.0);
                // through the trivializations phi_shriek reads (x, u) -> (phi(x), u)
                const BundleElement image = phi_shriek(pb, element);
                const auto [fbase, fcoords] = trivialize(*pb.source, pb_patch.id, image);
                CHECK((fcoords - coords).norm() == 0.0);
                ++used;
            }
        }
    }
    CHECK(used > 200);
}

TEST_CASE("pullback composition is natural") {
    Fixture fx;
    const PullbackBundle outer = pullback_bundle(fx.mobius, fx.dbl);
    const PullbackBundle nested = pullback_bundle(outer.bundle, fx.rot);
    const PullbackBundle composed = pullback_bundle(fx.mobius, compose(fx.dbl, fx.rot));
    for (const auto& x : fx.circle.sample_points(128, 6)) {
        if (!composed.bundle.patch(0).contains(x) || !composed.bundle.patch(1).contains(x))
            continue;
        CHECK((nested.bundle.theta(0, 1, x) - composed.bundle.theta(0, 1, x)).cwiseAbs().maxCoeff() ==
              0.0);
    }
    CHECK(validate_cocycle(nested.bundle, 128, 0).pass);
}

TEST_CASE("pullback rejects maps into the wrong base") {
    Fixture fx;
    const SmoothMap wrong = equator_embedding(fx.circle, fx.sphere);
    CHECK_THROWS_AS((void)pullback_bundle(fx.mobius, wrong), Error);
    CHECK(pullback_bundle(fx.ts2, wrong).rank() == 2); // circle -> sphere is fine for TS^2
}
