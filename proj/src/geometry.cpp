#include "vbm/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace vbm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFdStepJacobian = 1e-7;  // first derivatives of chart maps
constexpr double kFdStepMetric = 1e-5;    // metric derivatives for Christoffels
constexpr double kShootingTol = 1e-9;     // residual in embedded coordinates

} // namespace

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a > kPi)
        a -= 2.0 * kPi;
    else if (a <= -kPi)
        a += 2.0 * kPi;
    return a;
}

const Chart& ManifoldModel::chart(int id) const {
    for (const auto& c : charts)
        if (c.id == id)
            return c;
    fail(Errc::ChartEscape, name + ": no chart with id " + std::to_string(id));
}

bool ManifoldModel::in_chart(int id, const Point& p) const { return chart(id).domain_test(p); }

int ManifoldModel::canonical_chart(const Point& p) const {
    for (const auto& c : charts)
        if (c.domain_test(p))
            return c.id;
    fail(Errc::ChartEscape, name + ": point lies in no chart domain");
}

Mat ManifoldModel::embed_jacobian_at(int chart_id, const Vec& local) const {
    const Chart& c = chart(chart_id);
    if (c.embed_jacobian)
        return c.embed_jacobian(local);
    Mat jac(embed_dim, dim);
    for (int j = 0; j < dim; ++j) {
        Vec up = local, dn = local;
        up[j] += kFdStepJacobian;
        dn[j] -= kFdStepJacobian;
        jac.col(j) = (c.to_embedded(up) - c.to_embedded(dn)) / (2.0 * kFdStepJacobian);
    }
    return jac;
}

Mat ManifoldModel::chart_transition_jacobian(int from_chart, int to_chart, const Vec& local_from) const {
    const Chart& from = chart(from_chart);
    const Chart& to = chart(to_chart);
    Mat jac(dim, dim);
    for (int j = 0; j < dim; ++j) {
        Vec up = local_from, dn = local_from;
        up[j] += kFdStepJacobian;
        dn[j] -= kFdStepJacobian;
        jac.col(j) = (to.to_local(from.to_embedded(up)) - to.to_local(from.to_embedded(dn))) /
                     (2.0 * kFdStepJacobian);
    }
    return jac;
}

Vec ManifoldModel::tangent_to_embedded(const TangentVector& v) const {
    const Chart& c = chart(v.chart_id);
    return embed_jacobian_at(v.chart_id, c.to_local(v.base)) * v.components;
}

TangentVector ManifoldModel::tangent_from_embedded(const Point& p, const Vec& w_embedded, int chart_id) const {
    if (chart_id < 0)
        chart_id = canonical_chart(p);
    const Chart& c = chart(chart_id);
    const Mat jac = embed_jacobian_at(chart_id, c.to_local(p));
    // jac has full column rank on the domain; least squares projects exactly
    // when w is tangent
    Vec comps = jac.rows() == jac.cols() ? Vec(jac.partialPivLu().solve(w_embedded))
                                         : Vec(jac.colPivHouseholderQr().solve(w_embedded));
    return TangentVector{p, std::move(comps), chart_id};
}

TangentVector ManifoldModel::tangent_to_chart(const TangentVector& v, int chart_id) const {
    if (chart_id == v.chart_id)
        return v;
    const Chart& from = chart(v.chart_id);
    const Mat jac = chart_transition_jacobian(v.chart_id, chart_id, from.to_local(v.base));
    return TangentVector{v.base, jac * v.components, chart_id};
}

double ManifoldModel::metric_norm(const TangentVector& v) const {
    const Chart& c = chart(v.chart_id);
    const Mat g = metric(v.chart_id, c.to_local(v.base));
    return std::sqrt(v.components.dot(g * v.components));
}

std::vector<Mat> ManifoldModel::christoffel(int chart_id, const Vec& local) const {
    if (christoffel_closed)
        return christoffel_closed(chart_id, local);
    return christoffel_fd(chart_id, local);
}

std::vector<Mat> ManifoldModel::christoffel_fd(int chart_id, const Vec& local) const {
    // Gamma^k_ij = (1/2) g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
    const double h = kFdStepMetric;
    std::vector<Mat> dg(dim); // dg[l] = d g / d u_l
    for (int l = 0; l < dim; ++l) {
        Vec up = local, dn = local;
        up[l] += h;
        dn[l] -= h;
        dg[l] = (metric(chart_id, up) - metric(chart_id, dn)) / (2.0 * h);
    }
    const Mat ginv = metric(chart_id, local).inverse();
    std::vector<Mat> gamma(dim, Mat::Zero(dim, dim));
    for (int k = 0; k < dim; ++k)
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                double sum = 0.0;
                for (int l = 0; l < dim; ++l)
                    sum += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
                gamma[k](i, j) = 0.5 * sum;
            }
    return gamma;
}

GeodesicPath ManifoldModel::geodesic_path(const TangentVector& v0, int steps) const {
    if (steps <= 0)
        steps = ode_steps;
    int chart_id = v0.chart_id;
    Vec u = chart(chart_id).to_local(v0.base);
    Vec du = v0.components;

    GeodesicPath path;
    path.points.reserve(static_cast<std::size_t>(steps) + 1);
    path.points.push_back(v0.base);
    path.velocities.push_back(v0);

    const double h = 1.0 / steps;
    auto acceleration = [&](int cid, const Vec& uu, const Vec& dd) {
        const auto gamma = christoffel(cid, uu);
        Vec acc(dim);
        for (int k = 0; k < dim; ++k)
            acc[k] = -dd.dot(gamma[k] * dd);
        return acc;
    };

    for (int s = 0; s < steps; ++s) {
        const Vec k1u = du, k1v = acceleration(chart_id, u, du);
        const Vec k2u = du + 0.5 * h * k1v, k2v = acceleration(chart_id, u + 0.5 * h * k1u, du + 0.5 * h * k1v);
        const Vec k3u = du + 0.5 * h * k2v, k3v = acceleration(chart_id, u + 0.5 * h * k2u, du + 0.5 * h * k2v);
        const Vec k4u = du + h * k3v, k4v = acceleration(chart_id, u + h * k3u, du + h * k3v);
        u += (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        du += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);

        Point p = chart(chart_id).to_embedded(u);
        if (!chart(chart_id).domain_test(p)) {
            int next = -1;
            for (const auto& c : charts)
                if (c.id != chart_id && c.domain_test(p)) {
                    next = c.id;
                    break;
                }
            if (next < 0)
                fail(Errc::ChartEscape, name + ": geodesic left all chart domains");
            const Mat jac = chart_transition_jacobian(chart_id, next, u);
            du = jac * du;
            chart_id = next;
            u = chart(chart_id).to_local(p);
        }
        path.points.push_back(p);
        path.velocities.push_back(TangentVector{p, du, chart_id});
    }
    return path;
}

std::vector<Point> ManifoldModel::geodesic_integrate(const TangentVector& v, int steps) const {
    return geodesic_path(v, steps).points;
}

Point ManifoldModel::exp_ode(const TangentVector& v, int steps) const {
    return geodesic_path(v, steps).points.back();
}

double ManifoldModel::path_length(const GeodesicPath& path) const {
    // geodesics have constant speed, so a Riemann sum over the integrated
    // velocities converges at the order of the integrator
    if (path.velocities.size() < 2)
        return 0.0;
    const double h = 1.0 / static_cast<double>(path.velocities.size() - 1);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < path.velocities.size(); ++i)
        total += h * metric_norm(path.velocities[i]);
    return total;
}

Point ManifoldModel::exp(const TangentVector& v) const {
    const double norm = metric_norm(v);
    if (!(norm < injectivity_bound))
        fail(Errc::VelocityTooLarge, name + ": |v| = " + std::to_string(norm) +
                                         " exceeds injectivity bound " + std::to_string(injectivity_bound));
    if (exp_closed)
        return exp_closed(v.base, tangent_to_embedded(v));
    return exp_ode(v);
}

bool ManifoldModel::in_injectivity_domain(const Point& p, const Point& q) const {
    return distance(p, q) < injectivity_bound;
}

double ManifoldModel::distance(const Point& p, const Point& q) const {
    if (distance_closed)
        return distance_closed(p, q);
    // generic route: shoot for q and measure the initial speed; treated as
    // outside the diagonal neighbourhood when the shot diverges
    try {
        return metric_norm(log_shooting(p, q));
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

TangentVector ManifoldModel::log(const Point& p, const Point& q) const {
    if (!in_injectivity_domain(p, q))
        fail(Errc::OutsideDiagonalNeighborhood,
             name + ": points at distance " + std::to_string(distance(p, q)) +
                 " with bound " + std::to_string(injectivity_bound));
    if (log_closed)
        return tangent_from_embedded(p, log_closed(p, q));
    return log_shooting(p, q);
}

TangentVector ManifoldModel::log_shooting(const Point& p, const Point& q, int max_iterations) const {
    const int chart_id = canonical_chart(p);
    const Chart& c = chart(chart_id);
    const Vec local = c.to_local(p);
    const Mat jac = embed_jacobian_at(chart_id, local);

    // chord projected to the tangent space as the initial guess
    Vec v = jac.colPivHouseholderQr().solve(q - p);
    {
        const double n0 = metric_norm(TangentVector{p, v, chart_id});
        const double cap = 0.9 * injectivity_bound;
        if (std::isfinite(cap) && n0 > cap && n0 > 0.0)
            v *= cap / n0;
    }

    auto residual = [&](const Vec& comps) -> Vec {
        return exp_ode(TangentVector{p, comps, chart_id}) - q;
    };

    Vec r = residual(v);
    for (int iter = 0; iter < max_iterations; ++iter) {
        if (r.norm() < kShootingTol)
            return TangentVector{p, v, chart_id};
        Mat jr(embed_dim, dim);
        const double h = 1e-6;
        for (int j = 0; j < dim; ++j) {
            Vec up = v, dn = v;
            up[j] += h;
            dn[j] -= h;
            jr.col(j) = (residual(up) - residual(dn)) / (2.0 * h);
        }
        const Vec dv = jr.colPivHouseholderQr().solve(-r);
        double scale = 1.0;
        Vec r_next = residual(v + scale * dv);
        while (r_next.norm() >= r.norm() && scale > 1.0 / 1024.0) {
            scale *= 0.5;
            r_next = residual(v + scale * dv);
        }
        if (r_next.norm() >= r.norm())
            break; // no descent direction left
        v += scale * dv;
        r = std::move(r_next);
    }
    if (r.norm() < kShootingTol)
        return TangentVector{p, v, chart_id};
    fail(Errc::ShootingDiverged,
         name + ": residual " + std::to_string(r.norm()) + " after iteration cap");
}

std::vector<Point> ManifoldModel::sample_points(int count, std::uint64_t seed) const {
    std::vector<BoxSampler> samplers;
    samplers.reserve(charts.size());
    for (const auto& c : charts)
        samplers.emplace_back(c.sample_lo, c.sample_hi, seed + static_cast<std::uint64_t>(c.id));
    std::vector<Point> points;
    points.reserve(static_cast<std::size_t>(count));
    std::size_t chart_index = 0;
    int guard = 64 * count + 64;
    while (static_cast<int>(points.size()) < count && guard-- > 0) {
        const Chart& c = charts[chart_index];
        const Point p = c.to_embedded(samplers[chart_index].next());
        chart_index = (chart_index + 1) % charts.size();
        if (c.domain_test(p))
            points.push_back(p);
    }
    return points;
}

// ---------------------------------------------------------------------------
// catalog

ManifoldModel make_euclidean(int n) {
    ManifoldModel m;
    m.name = "euclidean(" + std::to_string(n) + ")";
    m.dim = n;
    m.embed_dim = n;
    Chart c;
    c.id = 0;
    c.domain_test = [](const Point&) { return true; };
    c.to_local = [](const Point& p) { return p; };
    c.to_embedded = [](const Vec& u) { return u; };
    c.embed_jacobian = [n](const Vec&) { return Mat::Identity(n, n); };
    c.sample_lo = Vec::Constant(n, -3.0);
    c.sample_hi = Vec::Constant(n, 3.0);
    m.charts.push_back(std::move(c));
    m.metric = [n](int, const Vec&) { return Mat::Identity(n, n); };
    m.injectivity_bound = std::numeric_limits<double>::infinity();
    m.exp_closed = [](const Point& p, const Vec& w) { return p + w; };
    m.log_closed = [](const Point& p, const Point& q) { return q - p; };
    m.distance_closed = [](const Point& p, const Point& q) { return (q - p).norm(); };
    m.christoffel_closed = [n](int, const Vec&) { return std::vector<Mat>(n, Mat::Zero(n, n)); };
    return m;
}

namespace {

Point circle_point(double theta) {
    Point p(2);
    p << std::cos(theta), std::sin(theta);
    return p;
}

double circle_angle(const Point& p) { return std::atan2(p[1], p[0]); }

Chart circle_chart(int id) {
    // chart 0: angles in (-pi, pi), unusable near (-1, 0)
    // chart 1: angles in (0, 2 pi), unusable near (1, 0)
    Chart c;
    c.id = id;
    if (id == 0) {
        c.domain_test = [](const Point& p) { return std::abs(circle_angle(p)) < kPi - 0.05; };
        c.to_local = [](const Point& p) {
            Vec u(1);
            u << circle_angle(p);
            return u;
        };
        c.sample_lo = Vec::Constant(1, -kPi + 0.1);
        c.sample_hi = Vec::Constant(1, kPi - 0.1);
    } else {
        c.domain_test = [](const Point& p) { return std::abs(circle_angle(p)) > 0.05; };
        c.to_local = [](const Point& p) {
            const double a = circle_angle(p);
            Vec u(1);
            u << (a <= 0.0 ? a + 2.0 * kPi : a);
            return u;
        };
        c.sample_lo = Vec::Constant(1, 0.1);
        c.sample_hi = Vec::Constant(1, 2.0 * kPi - 0.1);
    }
    c.to_embedded = [](const Vec& u) { return circle_point(u[0]); };
    c.embed_jacobian = [](const Vec& u) {
        Mat jac(2, 1);
        jac << -std::sin(u[0]), std::cos(u[0]);
        return jac;
    };
    return c;
}

} // namespace

ManifoldModel make_circle() {
    ManifoldModel m;
    m.name = "circle";
    m.dim = 1;
    m.embed_dim = 2;
    m.charts = {circle_chart(0), circle_chart(1)};
    m.metric = [](int, const Vec&) { return Mat::Identity(1, 1); };
    m.injectivity_bound = kPi - 0.1;
    m.exp_closed = [](const Point& p, const Vec& w) {
        // signed arc length of w along the positive tangent at p
        const double arc = -p[1] * w[0] + p[0] * w[1];
        return circle_point(circle_angle(p) + arc);
    };
    m.log_closed = [](const Point& p, const Point& q) {
        const double arc = wrap_angle(circle_angle(q) - circle_angle(p));
        Vec w(2);
        w << -p[1] * arc, p[0] * arc;
        return w;
    };
    m.distance_closed = [](const Point& p, const Point& q) {
        return std::abs(wrap_angle(circle_angle(q) - circle_angle(p)));
    };
    m.christoffel_closed = [](int, const Vec&) { return std::vector<Mat>(1, Mat::Zero(1, 1)); };
    return m;
}

namespace {

// stereographic charts: id 0 projects from the north pole, id 1 from the
// south pole; transition is u -> u / |u|^2
Chart sphere_chart(int id) {
    const double sign = (id == 0) ? 1.0 : -1.0;
    Chart c;
    c.id = id;
    c.domain_test = [sign](const Point& p) { return sign * p[2] < 0.95; };
    c.to_local = [sign](const Point& p) {
        const double denom = 1.0 - sign * p[2];
        Vec u(2);
        u << p[0] / denom, p[1] / denom;
        return u;
    };
    c.to_embedded = [sign](const Vec& u) {
        const double s = u.squaredNorm();
        Point p(3);
        p << 2.0 * u[0] / (s + 1.0), 2.0 * u[1] / (s + 1.0), sign * (s - 1.0) / (s + 1.0);
        return p;
    };
    c.embed_jacobian = [sign](const Vec& u) {
        const double s = u.squaredNorm();
        const double d = (s + 1.0) * (s + 1.0);
        Mat jac(3, 2);
        jac(0, 0) = (2.0 * (s + 1.0) - 4.0 * u[0] * u[0]) / d;
        jac(0, 1) = -4.0 * u[0] * u[1] / d;
        jac(1, 0) = jac(0, 1);
        jac(1, 1) = (2.0 * (s + 1.0) - 4.0 * u[1] * u[1]) / d;
        jac(2, 0) = sign * 4.0 * u[0] / d;
        jac(2, 1) = sign * 4.0 * u[1] / d;
        return jac;
    };
    c.sample_lo = Vec::Constant(2, -2.2);
    c.sample_hi = Vec::Constant(2, 2.2);
    return c;
}

} // namespace

ManifoldModel make_sphere2() {
    ManifoldModel m;
    m.name = "sphere2";
    m.dim = 2;
    m.embed_dim = 3;
    m.charts = {sphere_chart(0), sphere_chart(1)};
    m.metric = [](int, const Vec& u) {
        const double s = u.squaredNorm();
        const double lambda = 4.0 / ((1.0 + s) * (1.0 + s));
        return Mat(lambda * Mat::Identity(2, 2));
    };
    m.injectivity_bound = kPi - 0.1;
    m.exp_closed = [](const Point& p, const Vec& w) {
        const double t = w.norm();
        if (t < 1e-14)
            return p;
        Point q = std::cos(t) * p + std::sin(t) * (w / t);
        return Point(q / q.norm());
    };
    m.log_closed = [](const Point& p, const Point& q) {
        const double cosang = std::clamp(p.dot(q), -1.0, 1.0);
        const double ang = std::acos(cosang);
        Vec perp = q - cosang * p;
        const double pn = perp.norm();
        if (pn < 1e-14)
            return Vec(Vec::Zero(3));
        return Vec((ang / pn) * perp);
    };
    m.distance_closed = [](const Point& p, const Point& q) {
        return std::acos(std::clamp(p.dot(q), -1.0, 1.0));
    };
    // conformal metric lambda I with mu = log(2) - log(1+s):
    // Gamma^k_ij = d_j mu delta_ki + d_i mu delta_kj - d_k mu delta_ij
    m.christoffel_closed = [](int, const Vec& u) {
        const double s = u.squaredNorm();
        Vec dmu = -2.0 * u / (1.0 + s);
        std::vector<Mat> gamma(2, Mat::Zero(2, 2));
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    double g = 0.0;
                    if (k == i)
                        g += dmu[j];
                    if (k == j)
                        g += dmu[i];
                    if (i == j)
                        g -= dmu[k];
                    gamma[k](i, j) = g;
                }
        return gamma;
    };
    return m;
}

namespace {

double torus_angle(const Point& p, int factor) {
    return std::atan2(p[2 * factor + 1], p[2 * factor]);
}

} // namespace

ManifoldModel make_torus2() {
    // flat torus in R^4: (cos a, sin a, cos b, sin b)
    ManifoldModel m;
    m.name = "torus2";
    m.dim = 2;
    m.embed_dim = 4;
    auto factor_ok = [](double angle, int which) {
        return which == 0 ? std::abs(angle) < kPi - 0.05 : std::abs(angle) > 0.05;
    };
    auto factor_local = [](double angle, int which) {
        if (which == 0)
            return angle;
        return angle <= 0.0 ? angle + 2.0 * kPi : angle;
    };
    for (int id = 0; id < 4; ++id) {
        const int wa = id / 2, wb = id % 2;
        Chart c;
        c.id = id;
        c.domain_test = [=](const Point& p) {
            return factor_ok(torus_angle(p, 0), wa) && factor_ok(torus_angle(p, 1), wb);
        };
        c.to_local = [=](const Point& p) {
            Vec u(2);
            u << factor_local(torus_angle(p, 0), wa), factor_local(torus_angle(p, 1), wb);
            return u;
        };
        c.to_embedded = [](const Vec& u) {
            Point p(4);
            p << std::cos(u[0]), std::sin(u[0]), std::cos(u[1]), std::sin(u[1]);
            return p;
        };
        c.embed_jacobian = [](const Vec& u) {
            Mat jac = Mat::Zero(4, 2);
            jac(0, 0) = -std::sin(u[0]);
            jac(1, 0) = std::cos(u[0]);
            jac(2, 1) = -std::sin(u[1]);
            jac(3, 1) = std::cos(u[1]);
            return jac;
        };
        auto lo = [&](int which) { return which == 0 ? -kPi + 0.1 : 0.1; };
        auto hi = [&](int which) { return which == 0 ? kPi - 0.1 : 2.0 * kPi - 0.1; };
        c.sample_lo = Vec(2);
        c.sample_hi = Vec(2);
        c.sample_lo << lo(wa), lo(wb);
        c.sample_hi << hi(wa), hi(wb);
        m.charts.push_back(std::move(c));
    }
    m.metric = [](int, const Vec&) { return Mat::Identity(2, 2); };
    m.injectivity_bound = kPi - 0.1; // shortest loop 2 pi, halved, minus margin
    m.exp_closed = [](const Point& p, const Vec& w) {
        const double a = torus_angle(p, 0), b = torus_angle(p, 1);
        const double da = -p[1] * w[0] + p[0] * w[1];
        const double db = -p[3] * w[2] + p[2] * w[3];
        Point q(4);
        q << std::cos(a + da), std::sin(a + da), std::cos(b + db), std::sin(b + db);
        return q;
    };
    m.log_closed = [](const Point& p, const Point& q) {
        const double da = wrap_angle(torus_angle(q, 0) - torus_angle(p, 0));
        const double db = wrap_angle(torus_angle(q, 1) - torus_angle(p, 1));
        Vec w(4);
        w << -p[1] * da, p[0] * da, -p[3] * db, p[2] * db;
        return w;
    };
    m.distance_closed = [](const Point& p, const Point& q) {
        const double da = wrap_angle(torus_angle(q, 0) - torus_angle(p, 0));
        const double db = wrap_angle(torus_angle(q, 1) - torus_angle(p, 1));
        return std::hypot(da, db);
    };
    m.christoffel_closed = [](int, const Vec&) { return std::vector<Mat>(2, Mat::Zero(2, 2)); };
    return m;
}

ManifoldModel make_manifold_by_name(const std::string& name) {
    if (name == "circle")
        return make_circle();
    if (name == "sphere2")
        return make_sphere2();
    if (name == "torus2")
        return make_torus2();
    if (name.rfind("euclidean(", 0) == 0 && name.back() == ')') {
        const std::string inner = name.substr(10, name.size() - 11);
        try {
            const int n = std::stoi(inner);
            if (n >= 1)
                return make_euclidean(n);
        } catch (const std::exception&) {
        }
    }
    fail(Errc::UnresolvedReference, "unknown manifold '" + name + "'");
}

} // namespace vbm
