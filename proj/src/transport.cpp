#include "vbm/transport.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace vbm {

namespace {

double condition_number(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    const double smin = svd.singularValues().minCoeff();
    if (smin <= 0.0)
        return std::numeric_limits<double>::infinity();
    return svd.singularValues().maxCoeff() / smin;
}

} // namespace

Mat Connection::form(int patch_id, const Point& y, const Vec& w_chart) const {
    auto it = forms.find(patch_id);
    if (it == forms.end())
        fail(Errc::NotInPatch, "connection has no local form on patch " + std::to_string(patch_id));
    return it->second(y, w_chart);
}

Connection flat_connection(const VectorBundle& bundle) {
    Connection connection;
    connection.bundle = &bundle;
    const int rank = bundle.rank;
    for (const auto& patch : bundle.cocycle.patches)
        connection.forms[patch.id] = [rank](const Point&, const Vec&) { return Mat::Zero(rank, rank); };
    return connection;
}

Connection levi_civita_sphere(const VectorBundle& ts2) {
    Connection connection;
    connection.bundle = &ts2;
    const ManifoldModel* sphere = ts2.base;
    for (const auto& patch : ts2.cocycle.patches) {
        const int chart_id = patch.regions.front().chart_id;
        connection.forms[patch.id] = [sphere, chart_id](const Point& y, const Vec& w) {
            const auto gamma = sphere->christoffel(chart_id, sphere->chart(chart_id).to_local(y));
            Mat omega(2, 2);
            for (int k = 0; k < 2; ++k)
                for (int j = 0; j < 2; ++j) {
                    double sum = 0.0;
                    for (int i = 0; i < 2; ++i)
                        sum += gamma[k](i, j) * w[i];
                    omega(k, j) = sum;
                }
            return omega;
        };
    }
    return connection;
}

ValidationReport validate_connection(const Connection& connection, int sample_count,
                                     std::uint64_t seed, double tol_ode) {
    ValidationReport report;
    const VectorBundle& bundle = *connection.bundle;
    const ManifoldModel& base = *bundle.base;
    double residual = 0.0;
    Rng rng(seed);

    for (const auto& [key, entry] : bundle.cocycle.entries) {
        const auto [a, b] = key;
        if (a == b)
            continue;
        const CoverPatch& pa = bundle.patch(a);
        const CoverPatch& pb = bundle.patch(b);
        const int chart_a = pa.regions.front().chart_id;
        const int chart_b = pb.regions.front().chart_id;
        const auto points = sample_overlap({&pa, &pb}, sample_count, seed, entry.expect_nonempty);
        report.samples += static_cast<int>(points.size());
        for (const auto& y : points) {
            const Vec w_a = rng.vector(base.dim, -1.0, 1.0);
            const Vec u_a = base.chart(chart_a).to_local(y);
            const Vec w_b = base.chart_transition_jacobian(chart_a, chart_b, u_a) * w_a;

            const Mat theta = bundle.theta(a, b, y);
            const Mat theta_inv = theta.inverse();
            // directional derivative of theta along the curve with velocity w
            const double h = 1e-6;
            const Point y_up = base.chart(chart_a).to_embedded(u_a + h * w_a);
            const Point y_dn = base.chart(chart_a).to_embedded(u_a - h * w_a);
            const Mat dtheta = (bundle.theta(a, b, y_up) - bundle.theta(a, b, y_dn)) / (2.0 * h);

            const Mat lhs = connection.form(b, y, w_b);
            const Mat rhs = theta * connection.form(a, y, w_a) * theta_inv - dtheta * theta_inv;
            residual = std::max(residual, (lhs - rhs).cwiseAbs().maxCoeff());
        }
    }
    report.record("gauge_compatibility", residual, tol_ode);
    report.max_residual = residual;
    return report;
}

TransportResult parallel_transport(const Connection& connection, const std::vector<Point>& path) {
    const VectorBundle& bundle = *connection.bundle;
    const ManifoldModel& base = *bundle.base;
    const int rank = bundle.rank;

    TransportResult result;
    result.linear_map = Mat::Identity(rank, rank);
    if (path.empty())
        fail(Errc::ParameterOutOfRange, "transport needs a nonempty path");

    const int canonical_start = bundle.canonical_patch(path.front());
    result.start_patch = canonical_start;
    result.path_patches.push_back(canonical_start);
    int patch = canonical_start;

    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const Point& from = path[i];
        const Point& to = path[i + 1];
        if (!bundle.patch(patch).contains(from) || !bundle.patch(patch).contains(to)) {
            int next = -1;
            for (const auto& candidate : bundle.cocycle.patches)
                if (candidate.contains(from) && candidate.contains(to)) {
                    next = candidate.id;
                    break;
                }
            if (next < 0)
                fail(Errc::PatchGap, "consecutive path points share no cover patch");
            result.linear_map = bundle.theta(patch, next, from) * result.linear_map;
            patch = next;
            result.path_patches.push_back(patch);
        }

        const int chart_id = bundle.patch(patch).regions.front().chart_id;
        const Chart& chart = base.chart(chart_id);
        const Vec u0 = chart.to_local(from);
        const Vec u1 = chart.to_local(to);
        const Vec du = u1 - u0;

        // one RK4 step for M' = -omega(y(t))(du) M across the segment
        auto rate = [&](double t, const Mat& m) -> Mat {
            const Point y = chart.to_embedded(u0 + t * du);
            return -connection.form(patch, y, du) * m;
        };
        const Mat& m0 = result.linear_map;
        const Mat k1 = rate(0.0, m0);
        const Mat k2 = rate(0.5, m0 + 0.5 * k1);
        const Mat k3 = rate(0.5, m0 + 0.5 * k2);
        const Mat k4 = rate(1.0, m0 + k3);
        result.linear_map = m0 + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        ++result.step_count;
    }

    // normalize to canonical coordinates at the endpoint so results compose
    const int canonical_end = bundle.canonical_patch(path.back());
    if (canonical_end != patch) {
        result.linear_map = bundle.theta(patch, canonical_end, path.back()) * result.linear_map;
        result.path_patches.push_back(canonical_end);
    }
    result.end_patch = canonical_end;

    if (condition_number(result.linear_map) > kConditionGuard)
        fail(Errc::SingularTransport, "transport map exceeds the condition guard");
    return result;
}

TransportResult homotopy_transport_map(const Connection& connection, const TangentSection& section,
                                       const Point& x, int steps) {
    const VectorBundle& bundle = *connection.bundle;
    const ManifoldModel& n = *bundle.base;
    const TangentVector v = section(x);

    if (n.metric_norm(v) < 1e-15) {
        // H_{phi,phi} is the identity on the nose; no integration
        TransportResult result;
        const int patch = bundle.canonical_patch(v.base);
        result.linear_map = Mat::Identity(bundle.rank, bundle.rank);
        result.start_patch = patch;
        result.end_patch = patch;
        result.path_patches = {patch};
        return result;
    }

    std::vector<Point> path;
    path.reserve(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) {
        TangentVector scaled = v;
        scaled.components *= static_cast<double>(i) / steps;
        path.push_back(n.exp(scaled));
    }
    return parallel_transport(connection, path);
}

Vec homotopy_transport(const Connection& connection, const TangentSection& section, const Point& x,
                       const Vec& fiber, int steps) {
    return homotopy_transport_map(connection, section, x, steps).apply(fiber);
}

} // namespace vbm
