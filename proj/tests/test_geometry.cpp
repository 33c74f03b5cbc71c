#include "vbm/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace vbm;

namespace {
constexpr double kPi = std::numbers::pi;

Point pt2(double x, double y) {
    Point p(2);
    p << x, y;
    return p;
}

Point pt3(double x, double y, double z) {
    Point p(3);
    p << x, y, z;
    return p;
}
} // namespace

TEST_CASE("euclidean exp and log are affine") {
    const auto m = make_euclidean(3);
    const Point p = pt3(1.0, -2.0, 0.5);
    Vec v(3);
    v << 0.3, 0.1, -0.7;
    const TangentVector tangent{p, v, 0};
    CHECK((m.exp(tangent) - (p + v)).norm() == 0.0);
    const Point q = p + v;
    CHECK((m.log(p, q).components - (q - p)).norm() == 0.0); // log is literally q - p
    CHECK((m.log(p, q).components - v).norm() < 1e-15);
    CHECK(m.in_injectivity_domain(p, pt3(1e6, 0, 0))); // infinite bound
}

TEST_CASE("circle exp rotates by arc length") {
    const auto m = make_circle();
    const Point p = pt2(1.0, 0.0); // angle 0
    Vec v(1);
    v << kPi / 2;
    const Point q = m.exp(TangentVector{p, v, 0});
    CHECK((q - pt2(0.0, 1.0)).norm() < 1e-15);
    CHECK(m.distance(p, q) == doctest::Approx(kPi / 2).epsilon(1e-12));
}

TEST_CASE("sphere exp closed form matches the great circle") {
    const auto m = make_sphere2();
    const Point pole = pt3(0, 0, 1);
    Vec w(3);
    w << kPi / 2, 0, 0; // embedded tangent at the pole
    const TangentVector tangent = m.tangent_from_embedded(pole, w);
    const Point q = m.exp(tangent);
    CHECK((q - pt3(1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("sphere geodesic integration agrees with the closed form") {
    const auto m = make_sphere2();
    const Point pole = pt3(0, 0, 1);
    Vec w(3);
    w << kPi / 2, 0, 0;
    const TangentVector tangent = m.tangent_from_embedded(pole, w);
    const auto path = m.geodesic_integrate(tangent, 128);
    CHECK((path.back() - pt3(1, 0, 0)).norm() < 1e-6);

    // several directions, against the closed form
    for (int k = 0; k < 12; ++k) {
        const auto points = m.sample_points(12, 3);
        const Point p = points[static_cast<std::size_t>(k)];
        Rng rng(7 + static_cast<std::uint64_t>(k));
        TangentVector v{p, rng.vector(2, -0.6, 0.6), m.canonical_chart(p)};
        const Point via_ode = m.exp_ode(v);
        const Point via_closed = m.exp(v);
        CHECK((via_ode - via_closed).norm() < 1e-6);
    }
}

TEST_CASE("finite-difference Christoffels match the closed form on the sphere") {
    const auto m = make_sphere2();
    Vec u(2);
    u << 0.4, -0.7;
    const auto closed = m.christoffel(0, u);
    const auto fd = m.christoffel_fd(0, u);
    for (int k = 0; k < 2; ++k)
        CHECK((closed[static_cast<std::size_t>(k)] - fd[static_cast<std::size_t>(k)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-8);
}

TEST_CASE("zero velocity gives a constant path") {
    const auto m = make_sphere2();
    const Point p = pt3(0, 0, -1);
    const auto path = m.geodesic_integrate(TangentVector{p, Vec::Zero(2), m.canonical_chart(p)}, 16);
    for (const auto& q : path)
        CHECK((q - p).norm() == 0.0);
}

TEST_CASE("euclidean geodesic is uniformly spaced") {
    const auto m = make_euclidean(2);
    Vec v(2);
    v << 1.0, 2.0;
    const auto path = m.geodesic_integrate(TangentVector{pt2(0, 0), v, 0}, 8);
    REQUIRE(path.size() == 9);
    for (std::size_t i = 0; i < path.size(); ++i)
        CHECK((path[i] - (static_cast<double>(i) / 8.0) * v).norm() < 1e-12);
}

TEST_CASE("sphere log inverts exp and shooting reproduces it") {
    const auto m = make_sphere2();
    const Point pole = pt3(0, 0, 1);
    const Point target = pt3(1, 0, 0);
    const TangentVector logv = m.log(pole, target);
    CHECK((m.tangent_to_embedded(logv) - (pt3(kPi / 2, 0, 0))).norm() < 1e-12);

    const TangentVector shot = m.log_shooting(pole, target);
    CHECK((m.exp_ode(shot) - target).norm() < 1e-8);
    CHECK((m.tangent_to_embedded(shot) - m.tangent_to_embedded(logv)).norm() < 1e-6);
}

TEST_CASE("antipodal points are outside the diagonal neighbourhood") {
    const auto m = make_sphere2();
    CHECK(!m.in_injectivity_domain(pt3(0, 0, 1), pt3(0, 0, -1)));
    CHECK_THROWS_AS((void)m.log(pt3(0, 0, 1), pt3(0, 0, -1)), Error);
    try {
        (void)m.log(pt3(0, 0, 1), pt3(0, 0, -1));
    } catch (const Error& e) {
        CHECK(e.code() == Errc::OutsideDiagonalNeighborhood);
    }
}

TEST_CASE("velocity cap raises VelocityTooLarge") {
    const auto m = make_circle();
    Vec v(1);
    v << kPi; // injectivity bound is pi - 0.1
    try {
        (void)m.exp(TangentVector{pt2(1, 0), v, 0});
        FAIL("expected VelocityTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::VelocityTooLarge);
    }
}

TEST_CASE("exp/log roundtrip across the catalog") {
    for (const auto& m : {make_circle(), make_sphere2(), make_torus2()}) {
        Rng rng(11);
        const auto points = m.sample_points(24, 5);
        for (const auto& p : points) {
            const int chart = m.canonical_chart(p);
            Vec comps = rng.vector(m.dim, -1.0, 1.0);
            TangentVector v{p, comps, chart};
            const double norm = m.metric_norm(v);
            const double cap = 0.9 * m.injectivity_bound;
            if (norm > cap)
                v.components *= cap / norm;
            const Point q = m.exp(v);
            const TangentVector back = m.log(p, q);
            const TangentVector aligned = m.tangent_to_chart(back, chart);
            CHECK((aligned.components - v.components).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("metric norm equals integrated geodesic length") {
    for (const auto& m : {make_circle(), make_sphere2(), make_torus2()}) {
        const auto points = m.sample_points(6, 9);
        Rng rng(2);
        for (const auto& p : points) {
            TangentVector v{p, rng.vector(m.dim, -0.5, 0.5), m.canonical_chart(p)};
            const auto path = m.geodesic_path(v, 128);
            CHECK(m.path_length(path) == doctest::Approx(m.metric_norm(v)).epsilon(1e-6));
        }
    }
}

TEST_CASE("charts cohere on overlaps") {
    for (const auto& m : {make_circle(), make_sphere2(), make_torus2()}) {
        const auto points = m.sample_points(64, 13);
        for (const auto& p : points)
            for (const auto& c : m.charts) {
                if (!c.domain_test(p))
                    continue;
                CHECK((c.to_embedded(c.to_local(p)) - p).norm() < 1e-9);
            }
    }
}

TEST_CASE("geodesics hand off between sphere charts") {
    const auto m = make_sphere2();
    // start near the south pole heading over the north pole: leaves chart 0
    const Point start = pt3(std::sin(0.2), 0.0, std::cos(0.2));
    Vec w(3);
    w << std::cos(0.2) * 2.8, 0.0, -std::sin(0.2) * 2.8;
    const TangentVector v = m.tangent_from_embedded(start, w);
    const Point end = m.exp_ode(v, 256);
    const Point expected = m.exp(v);
    CHECK((end - expected).norm() < 1e-5);
}

TEST_CASE("torus distance wraps both factors") {
    const auto m = make_torus2();
    Point p(4), q(4);
    p << std::cos(0.1), std::sin(0.1), 1.0, 0.0;
    q << std::cos(-0.2), std::sin(-0.2), std::cos(0.4), std::sin(0.4);
    CHECK(m.distance(p, q) == doctest::Approx(std::hypot(0.3, 0.4)).epsilon(1e-12));
}

TEST_CASE("catalog resolves scenario names") {
    CHECK(make_manifold_by_name("circle").name == "circle");
    CHECK(make_manifold_by_name("euclidean(4)").dim == 4);
    CHECK_THROWS_AS((void)make_manifold_by_name("klein_bottle"), Error);
}

TEST_CASE("metric is symmetric positive definite at samples") {
    for (const auto& m : {make_circle(), make_sphere2(), make_torus2(), make_euclidean(3)}) {
        for (const auto& p : m.sample_points(32, 21)) {
            const int chart = m.canonical_chart(p);
            const Mat g = m.metric(chart, m.chart(chart).to_local(p));
            CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-14);
            Eigen::SelfAdjointEigenSolver<Mat> eigensolver(g);
            CHECK(eigensolver.eigenvalues().minCoeff() > 0.0);
        }
    }
}
