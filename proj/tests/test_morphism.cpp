#include "vbm/morphism.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace vbm;

namespace {
constexpr double kPi = std::numbers::pi;

struct Fixture {
    ManifoldModel circle = make_circle();
    ManifoldModel sphere = make_sphere2();
    VectorBundle ts1 = make_tangent_bundle(circle);
    VectorBundle mobius = make_mobius_bundle(circle);
    VectorBundle ts2 = make_tangent_sphere_bundle(sphere);
    SmoothMap dbl = circle_power_map(circle, 2);
    SmoothMap rot = circle_rotation(circle, 0.7);
    SmoothMap emb = equator_embedding(circle, sphere);
};

Point circle_pt(double theta) {
    Point p(2);
    p << std::cos(theta), std::sin(theta);
    return p;
}

} // namespace

TEST_CASE("zero morphism sends everything to the zero fibre") {
    Fixture fx;
    const BundleMorphism zero = zero_morphism(fx.mobius, fx.mobius, fx.dbl);
    Vec fiber(1);
    fiber << 3.0;
    const BundleElement out = evaluate(zero, BundleElement{0, circle_pt(0.3), fiber});
    CHECK(out.fiber.norm() == 0.0);
    CHECK((out.base_point - fx.dbl(circle_pt(0.3))).norm() == 0.0);
}

TEST_CASE("differential of the double cover is multiplication by two") {
    Fixture fx;
    const BundleMorphism d = differential_morphism(fx.ts1, fx.ts1, fx.dbl);
    for (const auto& x : fx.circle.sample_points(64, 1)) {
        for (const auto& [key, fn] : d.locals) {
            if (!d.in_refined_patch(key.first, key.second, x))
                continue;
            const Mat a = fn(x);
            CHECK(std::abs(a(0, 0) - 2.0) < 1e-9);
        }
        Vec u(1);
        u << 1.5;
        int patch = fx.ts1.canonical_patch(x);
        const BundleElement out = evaluate(d, BundleElement{patch, x, u});
        CHECK(std::abs(out.fiber[0] - 3.0) < 2e-9);
    }
}

TEST_CASE("evaluation is patch independent") {
    Fixture fx;
    const BundleMorphism d = differential_morphism(fx.ts1, fx.ts1, fx.dbl);
    Rng rng(2);
    int used = 0;
    for (const auto& x : fx.circle.sample_points(256, 2)) {
        std::vector<std::pair<int, int>> covering;
        for (const auto& [key, fn] : d.locals)
            if (d.in_refined_patch(key.first, key.second, x))
                covering.push_back(key);
        if (covering.size() < 2)
            continue;
        const Vec u = rng.vector(1, -2.0, 2.0);
        const int elem_patch = fx.ts1.canonical_patch(x);
        // route the evaluation through each covering pair explicitly
        Vec reference;
        for (const auto& [lambda, alpha] : covering) {
            const Vec in_lambda = fx.ts1.theta(elem_patch, lambda, x) * u;
            const Vec out = d.locals.at({lambda, alpha})(x) * in_lambda;
            const Vec aligned = fx.ts1.theta(alpha, covering.front().second, fx.dbl(x)) * out;
            if (reference.size() == 0)
                reference = aligned;
            else
                CHECK((aligned - reference).cwiseAbs().maxCoeff() < 1e-9);
        }
        ++used;
    }
    CHECK(used > 100);
}

TEST_CASE("overlap compatibility validates the differential and rejects a scaled patch") {
    Fixture fx;
    const BundleMorphism d = differential_morphism(fx.ts1, fx.ts1, fx.dbl);
    const auto good = check_overlap_compatibility(d, 128, 0);
    CHECK(good.pass);
    CHECK(good.max_residual < 1e-9);

    BundleMorphism broken = d;
    const MatrixFn original = broken.locals.at({1, 1});
    broken.locals[{1, 1}] = [original](const Point& x) { return Mat(2.0 * original(x)); };
    const auto bad = check_overlap_compatibility(broken, 128, 0);
    CHECK(!bad.pass);
    CHECK(bad.max_residual > 1.0); // the defect is of the order of |A| = 2
}

TEST_CASE("single entry families pass vacuously") {
    Fixture fx;
    BundleMorphism single = zero_morphism(fx.mobius, fx.mobius, fx.rot);
    MatrixFn only = single.locals.at({0, 0});
    single.locals.clear();
    single.locals[{0, 0}] = only;
    const auto report = check_overlap_compatibility(single, 64, 0);
    CHECK(report.pass);
    CHECK(report.samples == 0);
}

TEST_CASE("correspondence keeps local data on the nose") {
    Fixture fx;
    const BundleMorphism d = differential_morphism(fx.ts1, fx.ts1, fx.dbl);
    const MorphismOverIdentity over_id = morph_to_identity(d);
    const BundleMorphism back = identity_to_morph(over_id);
    for (const auto& x : fx.circle.sample_points(32, 3))
        for (const auto& [key, fn] : d.locals) {
            if (!d.in_refined_patch(key.first, key.second, x))
                continue;
            CHECK((fn(x) - back.locals.at(key)(x)).cwiseAbs().maxCoeff() == 0.0);
            CHECK((fn(x) - over_id.locals.at(key)(x)).cwiseAbs().maxCoeff() == 0.0);
        }
}

TEST_CASE("the canonical morphism corresponds to the identity section") {
    Fixture fx;
    const PullbackBundle pb = pullback_bundle(fx.mobius, fx.dbl);
    const BundleMorphism shriek = phi_shriek_morphism(pb);
    const MorphismOverIdentity section = morph_to_identity(shriek);
    // in matching frames the section matrix is the identity
    for (const auto& x : fx.circle.sample_points(64, 5)) {
        for (const auto& patch : pb.bundle.cocycle.patches) {
            if (!patch.contains(x))
                continue;
            CHECK((section.local_matrix(patch.id, patch.id, x) - Mat::Identity(1, 1))
                      .cwiseAbs()
                      .maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("evaluation through the pullback agrees with the direct morphism") {
    Fixture fx;
    const BundleMorphism d = differential_morphism(fx.ts1, fx.ts1, fx.dbl);
    const MorphismOverIdentity over_id = morph_to_identity(d);
    Rng rng(6);
    for (const auto& x : fx.circle.sample_points(256, 4)) {
        const Vec u = rng.vector(1, -2.0, 2.0);
        const BundleElement element{fx.ts1.canonical_patch(x), x, u};
        const BundleElement direct = evaluate(d, element);
        const BundleElement through = phi_shriek(*over_id.target, evaluate_identity(over_id, element));
        const Vec aligned =
            fx.ts1.theta(through.patch_id, direct.patch_id, direct.base_point) * through.fiber;
        CHECK((aligned - direct.fiber).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("vector space structure on a fixed fibre") {
    Fixture fx;
    const BundleMorphism d = differential_morphism(fx.ts1, fx.ts1, fx.dbl);
    const BundleMorphism zero = zero_morphism(fx.ts1, fx.ts1, fx.dbl);
    const BundleMorphism sum = morphism_add(d, zero);
    CHECK(morphism_distance(sum, d, 64, 0) < 1e-12);

    const BundleMorphism twice = morphism_scale(2.0, d);
    for (const auto& x : fx.circle.sample_points(32, 7))
        CHECK(std::abs(twice.local_matrix(0, 0, x)(0, 0) - 4.0) < 2e-9);

    // linearity of the correspondence
    Rng rng(8);
    const double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5);
    const BundleMorphism combo = morphism_add(morphism_scale(a, d), morphism_scale(b, twice));
    const MorphismOverIdentity lhs = morph_to_identity(combo);
    const MorphismOverIdentity rhs1 = morph_to_identity(d);
    const MorphismOverIdentity rhs2 = morph_to_identity(twice);
    for (const auto& x : fx.circle.sample_points(32, 9))
        CHECK((lhs.local_matrix(0, 0, x) -
               (a * rhs1.local_matrix(0, 0, x) + b * rhs2.local_matrix(0, 0, x)))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
}

TEST_CASE("adding morphisms over different base maps is rejected") {
    Fixture fx;
    const BundleMorphism over_dbl = zero_morphism(fx.mobius, fx.mobius, fx.dbl);
    const BundleMorphism over_rot = zero_morphism(fx.mobius, fx.mobius, fx.rot);
    try {
        (void)morphism_add(over_dbl, over_rot);
        FAIL("expected BaseMapMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::BaseMapMismatch);
    }
}

TEST_CASE("random morphisms are compatible across the refined cover") {
    Fixture fx;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const BundleMorphism random_mm = random_morphism(fx.mobius, fx.mobius, fx.dbl, seed);
        const auto report = check_overlap_compatibility(random_mm, 128, seed);
        CHECK(report.pass);
        // not the zero morphism: some local matrix is visibly nonzero
        double magnitude = 0.0;
        for (const auto& x : fx.circle.sample_points(128, seed))
            magnitude = std::max(magnitude, random_mm.local_matrix(
                                                fx.mobius.canonical_patch(x),
                                                fx.mobius.canonical_patch(fx.dbl(x)), x)
                                                .cwiseAbs()
                                                .maxCoeff());
        CHECK(magnitude > 1e-3);
    }
}

TEST_CASE("random morphisms work between different bundles") {
    Fixture fx;
    const BundleMorphism random_mm = random_morphism(fx.ts1, fx.ts2, fx.emb, 7);
    const auto report = check_overlap_compatibility(random_mm, 96, 11);
    CHECK(report.pass);
    Rng rng(12);
    for (const auto& x : fx.circle.sample_points(32, 13)) {
        const BundleElement element{fx.ts1.canonical_patch(x), x, rng.vector(1, -1, 1)};
        const BundleElement out = evaluate(random_mm, element);
        CHECK(out.fiber.size() == 2);
        CHECK((out.base_point - fx.emb(x)).norm() == 0.0);
    }
}
