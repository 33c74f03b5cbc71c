#include "vbm/bundle.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

namespace vbm {

namespace {

double condition_number(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0)
        return std::numeric_limits<double>::infinity();
    return smax / smin;
}

Mat guarded_inverse(const Mat& m, const std::string& what) {
    if (condition_number(m) > kConditionGuard)
        fail(Errc::IllConditioned, what + ": condition number exceeds guard");
    return m.inverse();
}

} // namespace

void TransitionCocycle::add(int from, int to, MatrixFn fn, bool expect_nonempty) {
    entries[{from, to}] = Entry{std::move(fn), expect_nonempty};
}

bool TransitionCocycle::has_entry(int from, int to) const {
    return entries.find({from, to}) != entries.end();
}

bool TransitionCocycle::connected(int from, int to) const {
    return from == to || has_entry(from, to) || has_entry(to, from);
}

const CoverPatch& TransitionCocycle::patch(int id) const {
    for (const auto& p : patches)
        if (p.id == id)
            return p;
    fail(Errc::NotInPatch, "no cover patch with id " + std::to_string(id));
}

Mat TransitionCocycle::theta(int from, int to, const Point& y, int rank) const {
    if (from == to) {
        auto it = entries.find({from, to});
        return it != entries.end() ? it->second.fn(y) : Mat(Mat::Identity(rank, rank));
    }
    if (auto it = entries.find({from, to}); it != entries.end())
        return it->second.fn(y);
    if (auto it = entries.find({to, from}); it != entries.end())
        return guarded_inverse(it->second.fn(y), "transition (" + std::to_string(to) + "," +
                                                     std::to_string(from) + ")");
    fail(Errc::NotInOverlap, "no transition between patches " + std::to_string(from) + " and " +
                                 std::to_string(to));
}

int VectorBundle::canonical_patch(const Point& p) const {
    for (const auto& patch : cocycle.patches)
        if (patch.contains(p))
            return patch.id;
    fail(Errc::NotInPatch, name + ": point lies in no cover patch");
}

void ValidationReport::record(const std::string& label, double value, double tolerance) {
    components.emplace_back(label, value);
    if (!(value < tolerance))
        pass = false;
}

std::vector<Point> sample_overlap(const std::vector<const CoverPatch*>& patches, int count,
                                  std::uint64_t seed, bool required) {
    std::vector<Point> found;
    if (patches.empty() || count <= 0)
        return found;
    const ManifoldModel* base = patches.front()->base;

    struct Stream {
        const Chart* chart;
        BoxSampler sampler;
    };
    std::vector<Stream> streams;
    std::uint64_t k = 0;
    for (const CoverPatch* p : patches)
        for (const auto& region : p->regions)
            streams.push_back(Stream{&base->chart(region.chart_id),
                                     BoxSampler(region.lo, region.hi, seed + 131 * k++)});

    int attempts = 64 * count * static_cast<int>(streams.size());
    std::size_t s = 0;
    while (static_cast<int>(found.size()) < count && attempts-- > 0) {
        Stream& stream = streams[s];
        s = (s + 1) % streams.size();
        const Point p = stream.chart->to_embedded(stream.sampler.next());
        bool ok = true;
        for (const CoverPatch* patch : patches)
            if (!patch->contains(p)) {
                ok = false;
                break;
            }
        if (ok)
            found.push_back(p);
    }
    if (found.empty() && required)
        fail(Errc::EmptyOverlapSampling, "declared overlap produced no sample points");
    return found;
}

ValidationReport validate_cocycle(const VectorBundle& bundle, int sample_count, std::uint64_t seed,
                                  double tol_alg) {
    if (sample_count < 1)
        fail(Errc::ParameterOutOfRange, "sample_count must be >= 1");
    ValidationReport report;
    const auto& cocycle = bundle.cocycle;

    // CC2 and per-entry condition guard; declared overlaps must be samplable
    double cc2 = 0.0, worst_condition = 1.0;
    for (const auto& patch : cocycle.patches) {
        const auto points = sample_overlap({&patch}, sample_count, seed, patch.expect_nonempty);
        report.samples += static_cast<int>(points.size());
        for (const auto& y : points)
            cc2 = std::max(cc2, (bundle.theta(patch.id, patch.id, y) -
                                 Mat::Identity(bundle.rank, bundle.rank))
                                    .cwiseAbs()
                                    .maxCoeff());
    }
    for (const auto& [key, entry] : cocycle.entries) {
        if (key.first == key.second)
            continue;
        const auto points = sample_overlap({&cocycle.patch(key.first), &cocycle.patch(key.second)},
                                           sample_count, seed, entry.expect_nonempty);
        report.samples += static_cast<int>(points.size());
        for (const auto& y : points)
            worst_condition = std::max(worst_condition, condition_number(entry.fn(y)));
    }

    // CC1 over every resolvable ordered triple with a nonempty sampled overlap
    double cc1 = 0.0;
    for (const auto& pa : cocycle.patches)
        for (const auto& pb : cocycle.patches)
            for (const auto& pc : cocycle.patches) {
                if (pa.id == pb.id && pb.id == pc.id)
                    continue;
                if (!cocycle.connected(pa.id, pb.id) || !cocycle.connected(pb.id, pc.id) ||
                    !cocycle.connected(pa.id, pc.id))
                    continue;
                const auto points = sample_overlap({&pa, &pb, &pc}, sample_count, seed, false);
                report.samples += static_cast<int>(points.size());
                for (const auto& y : points) {
                    try {
                        const Mat lhs = bundle.theta(pb.id, pc.id, y) * bundle.theta(pa.id, pb.id, y);
                        const Mat rhs = bundle.theta(pa.id, pc.id, y);
                        cc1 = std::max(cc1, (lhs - rhs).cwiseAbs().maxCoeff());
                    } catch (const Error& e) {
                        if (e.code() != Errc::IllConditioned)
                            throw;
                        worst_condition = std::numeric_limits<double>::infinity();
                    }
                }
            }

    report.record("cc1", cc1, tol_alg);
    report.record("cc2", cc2, tol_alg);
    report.record("condition", worst_condition, kConditionGuard);
    report.max_residual = std::max(cc1, cc2);
    return report;
}

BundleElement change_chart(const VectorBundle& bundle, const BundleElement& element, int target_patch) {
    const auto& src = bundle.patch(element.patch_id);
    const auto& dst = bundle.patch(target_patch);
    if (!src.contains(element.base_point) || !dst.contains(element.base_point))
        fail(Errc::NotInOverlap, bundle.name + ": base point not in both patch domains");
    return BundleElement{target_patch, element.base_point,
                         bundle.theta(element.patch_id, target_patch, element.base_point) * element.fiber};
}

std::pair<Point, Vec> trivialize(const VectorBundle& bundle, int patch, const BundleElement& element) {
    if (!bundle.patch(patch).contains(element.base_point) ||
        !bundle.patch(element.patch_id).contains(element.base_point))
        fail(Errc::NotInPatch, bundle.name + ": element base point outside the requested patch");
    return {element.base_point,
            bundle.theta(element.patch_id, patch, element.base_point) * element.fiber};
}

VectorBundle make_trivial_bundle(const ManifoldModel& base, int rank) {
    VectorBundle bundle;
    bundle.name = "trivial(" + base.name + "," + std::to_string(rank) + ")";
    bundle.base = &base;
    bundle.rank = rank;
    for (const auto& chart : base.charts) {
        CoverPatch patch;
        patch.id = chart.id;
        patch.base = &base;
        patch.membership = chart.domain_test;
        patch.regions = {SampleRegion{chart.id, chart.sample_lo, chart.sample_hi}};
        bundle.cocycle.patches.push_back(std::move(patch));
    }
    const Mat identity = Mat::Identity(rank, rank);
    for (std::size_t i = 0; i < base.charts.size(); ++i)
        for (std::size_t j = i + 1; j < base.charts.size(); ++j)
            bundle.cocycle.add(base.charts[i].id, base.charts[j].id,
                               [identity](const Point&) { return identity; });
    return bundle;
}

VectorBundle make_mobius_bundle(const ManifoldModel& circle) {
    VectorBundle bundle;
    bundle.name = "mobius";
    bundle.base = &circle;
    bundle.rank = 1;
    for (const auto& chart : circle.charts) {
        CoverPatch patch;
        patch.id = chart.id;
        patch.base = &circle;
        patch.membership = chart.domain_test;
        patch.regions = {SampleRegion{chart.id, chart.sample_lo, chart.sample_hi}};
        bundle.cocycle.patches.push_back(std::move(patch));
    }
    // +1 on the upper overlap component, -1 on the lower
    bundle.cocycle.add(0, 1, [](const Point& p) {
        Mat t(1, 1);
        t << (p[1] > 0.0 ? 1.0 : -1.0);
        return t;
    });
    return bundle;
}

VectorBundle make_tangent_sphere_bundle(const ManifoldModel& sphere) {
    VectorBundle bundle;
    bundle.name = "ts2";
    bundle.base = &sphere;
    bundle.rank = 2;
    for (const auto& chart : sphere.charts) {
        CoverPatch patch;
        patch.id = chart.id;
        patch.base = &sphere;
        patch.membership = chart.domain_test;
        patch.regions = {SampleRegion{chart.id, chart.sample_lo, chart.sample_hi}};
        bundle.cocycle.patches.push_back(std::move(patch));
    }
    // differential of the stereographic transition u -> u / |u|^2
    const ManifoldModel* m = &sphere;
    bundle.cocycle.add(0, 1, [m](const Point& p) {
        const Vec u = m->chart(0).to_local(p);
        const double s = u.squaredNorm();
        Mat jac(2, 2);
        jac(0, 0) = 1.0 / s - 2.0 * u[0] * u[0] / (s * s);
        jac(0, 1) = -2.0 * u[0] * u[1] / (s * s);
        jac(1, 0) = jac(0, 1);
        jac(1, 1) = 1.0 / s - 2.0 * u[1] * u[1] / (s * s);
        return jac;
    });
    return bundle;
}

VectorBundle make_tangent_bundle(const ManifoldModel& m) {
    if (m.name == "sphere2")
        return make_tangent_sphere_bundle(m);
    // remaining catalog entries have atlases whose transition Jacobians are
    // the identity (angle shifts and linear charts)
    VectorBundle bundle = make_trivial_bundle(m, m.dim);
    bundle.name = "T(" + m.name + ")";
    return bundle;
}

} // namespace vbm
