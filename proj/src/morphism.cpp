#include "vbm/morphism.hpp"

#include "vbm/expr.hpp"
#include "vbm/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace vbm {

namespace {

bool maps_agree(const SmoothMap& a, const SmoothMap& b) {
    if (a.source != b.source || a.target != b.target)
        return false;
    for (const auto& x : a.source->sample_points(8, 17))
        if ((a(x) - b(x)).norm() > 1e-12)
            return false;
    return true;
}

template <typename Morphism>
Mat resolve_local(const Morphism& morphism, const VectorBundle& e_bundle, const VectorBundle& f_like,
                  const std::function<Point(const Point&)>& to_target_base, int lambda, int alpha,
                  const Point& x) {
    if (auto it = morphism.locals.find({lambda, alpha}); it != morphism.locals.end())
        return it->second(x);
    const Point y = to_target_base(x);
    for (const auto& [key, fn] : morphism.locals) {
        const auto& [mu, beta] = key;
        if (!e_bundle.patch(mu).contains(x) || !f_like.patch(beta).contains(y))
            continue;
        if (!e_bundle.cocycle.connected(lambda, mu) || !f_like.cocycle.connected(beta, alpha))
            continue;
        // A_lambda^alpha = theta(beta,alpha) A_mu^beta T(lambda,mu)
        return f_like.theta(beta, alpha, y) * fn(x) * e_bundle.theta(lambda, mu, x);
    }
    fail(Errc::NoCoveringPatch, "no local entry resolvable at the given point");
}

} // namespace

CoverPatch refined_patch(const VectorBundle& e_bundle, int lambda,
                         std::function<bool(const Point&)> target_membership,
                         const std::function<Point(const Point&)>& base_map) {
    const CoverPatch& e_patch = e_bundle.patch(lambda);
    CoverPatch patch;
    patch.id = lambda;
    patch.base = e_patch.base;
    patch.membership = [inner = e_patch.membership, outer = std::move(target_membership),
                        base_map](const Point& x) { return inner(x) && outer(base_map(x)); };
    patch.regions = e_patch.regions;
    return patch;
}

bool BundleMorphism::in_refined_patch(int lambda, int alpha, const Point& x) const {
    return source->patch(lambda).contains(x) && target->patch(alpha).contains(base_map(x));
}

Mat BundleMorphism::local_matrix(int lambda, int alpha, const Point& x) const {
    return resolve_local(*this, *source, *target, base_map.eval, lambda, alpha, x);
}

bool MorphismOverIdentity::in_refined_patch(int lambda, int alpha, const Point& x) const {
    return source->patch(lambda).contains(x) && target->bundle.patch(alpha).contains(x);
}

Mat MorphismOverIdentity::local_matrix(int lambda, int alpha, const Point& x) const {
    return resolve_local(*this, *source, target->bundle,
                         [](const Point& x_) { return x_; }, lambda, alpha, x);
}

BundleElement evaluate(const BundleMorphism& morphism, const BundleElement& element) {
    const Point& x = element.base_point;
    for (const auto& [key, fn] : morphism.locals) {
        const auto& [lambda, alpha] = key;
        if (!morphism.in_refined_patch(lambda, alpha, x))
            continue;
        const Vec u = morphism.source->theta(element.patch_id, lambda, x) * element.fiber;
        return BundleElement{alpha, morphism.base_map(x), fn(x) * u};
    }
    fail(Errc::NoCoveringPatch, "morphism has no local entry covering the element");
}

BundleElement evaluate_identity(const MorphismOverIdentity& morphism, const BundleElement& element) {
    const Point& x = element.base_point;
    for (const auto& [key, fn] : morphism.locals) {
        const auto& [lambda, alpha] = key;
        if (!morphism.in_refined_patch(lambda, alpha, x))
            continue;
        const Vec u = morphism.source->theta(element.patch_id, lambda, x) * element.fiber;
        return BundleElement{alpha, x, fn(x) * u};
    }
    fail(Errc::NoCoveringPatch, "section has no local entry covering the element");
}

ValidationReport check_overlap_compatibility(const BundleMorphism& morphism, int sample_count,
                                             std::uint64_t seed, double tol_alg) {
    ValidationReport report;
    double residual = 0.0;
    const auto& e_bundle = *morphism.source;
    const auto& f_bundle = *morphism.target;

    std::vector<std::pair<int, int>> keys;
    for (const auto& [key, fn] : morphism.locals)
        keys.push_back(key);

    for (std::size_t i = 0; i < keys.size(); ++i)
        for (std::size_t j = i + 1; j < keys.size(); ++j) {
            const auto [lambda, alpha] = keys[i];
            const auto [mu, beta] = keys[j];
            if (!e_bundle.cocycle.connected(lambda, mu) || !f_bundle.cocycle.connected(alpha, beta))
                continue;
            const CoverPatch first = refined_patch(e_bundle, lambda,
                                                   f_bundle.patch(alpha).membership, morphism.base_map.eval);
            const CoverPatch second = refined_patch(e_bundle, mu,
                                                    f_bundle.patch(beta).membership, morphism.base_map.eval);
            const auto points = sample_overlap({&first, &second}, sample_count, seed, false);
            report.samples += static_cast<int>(points.size());
            for (const auto& x : points) {
                const Point y = morphism.base_map(x);
                const Mat lhs = morphism.locals.at(keys[j])(x);
                const Mat rhs = f_bundle.theta(alpha, beta, y) * morphism.locals.at(keys[i])(x) *
                                e_bundle.theta(mu, lambda, x);
                residual = std::max(residual, (lhs - rhs).cwiseAbs().maxCoeff());
            }
        }

    report.record("overlap_compatibility", residual, tol_alg);
    report.max_residual = residual;
    return report;
}

MorphismOverIdentity morph_to_identity(const BundleMorphism& morphism) {
    // light probe of the compatibility precondition
    if (!check_overlap_compatibility(morphism, 16, 0, 1e-6).pass)
        fail(Errc::IncompatibleLocals, "local family violates overlap compatibility");
    MorphismOverIdentity result;
    result.source = morphism.source;
    result.target = std::make_shared<PullbackBundle>(pullback_bundle(*morphism.target, morphism.base_map));
    result.locals = morphism.locals;
    return result;
}

BundleMorphism identity_to_morph(const MorphismOverIdentity& morphism) {
    BundleMorphism result;
    result.source = morphism.source;
    result.target = morphism.target->source;
    result.base_map = morphism.target->map;
    result.locals = morphism.locals;
    return result;
}

BundleMorphism morphism_add(const BundleMorphism& a, const BundleMorphism& b) {
    if (a.source != b.source || a.target != b.target || !maps_agree(a.base_map, b.base_map))
        fail(Errc::BaseMapMismatch, "morphism_add: operands live over different base maps");
    auto lhs = std::make_shared<BundleMorphism>(a);
    auto rhs = std::make_shared<BundleMorphism>(b);
    BundleMorphism result;
    result.source = a.source;
    result.target = a.target;
    result.base_map = a.base_map;
    std::map<std::pair<int, int>, MatrixFn> locals;
    for (const auto& [key, fn] : a.locals)
        locals[key] = nullptr;
    for (const auto& [key, fn] : b.locals)
        locals[key] = nullptr;
    for (auto& [key, fn] : locals) {
        const auto [lambda, alpha] = key;
        fn = [lhs, rhs, lambda, alpha](const Point& x) {
            return Mat(lhs->local_matrix(lambda, alpha, x) + rhs->local_matrix(lambda, alpha, x));
        };
    }
    result.locals = std::move(locals);
    return result;
}

BundleMorphism morphism_scale(double factor, const BundleMorphism& morphism) {
    BundleMorphism result;
    result.source = morphism.source;
    result.target = morphism.target;
    result.base_map = morphism.base_map;
    for (const auto& [key, fn] : morphism.locals)
        result.locals[key] = [fn, factor](const Point& x) { return Mat(factor * fn(x)); };
    return result;
}

double morphism_distance(const BundleMorphism& a, const BundleMorphism& b, int sample_count,
                         std::uint64_t seed) {
    double sup = 0.0;
    std::vector<std::pair<int, int>> keys;
    for (const auto& [key, fn] : a.locals)
        keys.push_back(key);
    for (const auto& [key, fn] : b.locals)
        if (a.locals.find(key) == a.locals.end())
            keys.push_back(key);
    for (const auto& [lambda, alpha] : keys) {
        const CoverPatch patch = refined_patch(*a.source, lambda, a.target->patch(alpha).membership,
                                               a.base_map.eval);
        for (const auto& x : sample_overlap({&patch}, sample_count, seed, false))
            sup = std::max(sup, (a.local_matrix(lambda, alpha, x) - b.local_matrix(lambda, alpha, x))
                                    .cwiseAbs()
                                    .maxCoeff());
    }
    return sup;
}

BundleMorphism zero_morphism(const VectorBundle& e_bundle, const VectorBundle& f_bundle,
                             const SmoothMap& phi) {
    BundleMorphism result;
    result.source = &e_bundle;
    result.target = &f_bundle;
    result.base_map = phi;
    const Mat zero = Mat::Zero(f_bundle.rank, e_bundle.rank);
    for (const auto& e_patch : e_bundle.cocycle.patches)
        for (const auto& f_patch : f_bundle.cocycle.patches)
            result.locals[{e_patch.id, f_patch.id}] = [zero](const Point&) { return zero; };
    return result;
}

BundleMorphism differential_morphism(const VectorBundle& tm, const VectorBundle& tn,
                                     const SmoothMap& phi) {
    if (tm.base != phi.source || tn.base != phi.target)
        fail(Errc::BaseMismatch, "differential: tangent bundles do not match the map");
    const ManifoldModel* m = phi.source;
    const ManifoldModel* n = phi.target;
    BundleMorphism result;
    result.source = &tm;
    result.target = &tn;
    result.base_map = phi;
    for (const auto& m_chart : m->charts)
        for (const auto& n_chart : n->charts) {
            const int lambda = m_chart.id, alpha = n_chart.id;
            result.locals[{lambda, alpha}] = [m, n, lambda, alpha, eval = phi.eval](const Point& x) {
                const Chart& sc = m->chart(lambda);
                const Vec u = sc.to_local(x);
                // differential of phi in embedded target coordinates, then
                // projected onto the alpha chart frame
                Mat d(n->embed_dim, m->dim);
                const double h = 1e-6;
                for (int j = 0; j < m->dim; ++j) {
                    Vec up = u, dn = u;
                    up[j] += h;
                    dn[j] -= h;
                    d.col(j) = (eval(sc.to_embedded(up)) - eval(sc.to_embedded(dn))) / (2.0 * h);
                }
                const Point y = eval(x);
                const Mat jac = n->embed_jacobian_at(alpha, n->chart(alpha).to_local(y));
                return Mat(jac.colPivHouseholderQr().solve(d));
            };
        }
    return result;
}

BundleMorphism phi_shriek_morphism(const PullbackBundle& pb) {
    BundleMorphism result;
    result.source = &pb.bundle;
    result.target = pb.source;
    result.base_map = pb.map;
    const VectorBundle* f_bundle = pb.source;
    for (const auto& src_patch : pb.bundle.cocycle.patches)
        for (const auto& dst_patch : f_bundle->cocycle.patches) {
            if (!f_bundle->cocycle.connected(src_patch.id, dst_patch.id))
                continue;
            const int a = src_patch.id, b = dst_patch.id;
            result.locals[{a, b}] = [f_bundle, a, b, eval = pb.map.eval](const Point& x) {
                return f_bundle->theta(a, b, eval(x));
            };
        }
    return result;
}

BundleMorphism random_morphism(const VectorBundle& e_bundle, const VectorBundle& f_bundle,
                               const SmoothMap& phi, std::uint64_t seed, int seed_count) {
    Rng rng(seed);
    const ManifoldModel* m = e_bundle.base;

    struct Seed {
        int lambda, alpha;
        int chart_id;
        Vec center;
        double radius;
        Mat matrix;
    };
    std::vector<Seed> seeds;

    for (int k = 0; k < seed_count; ++k) {
        const int lambda =
            e_bundle.cocycle.patches[rng.next_u64() % e_bundle.cocycle.patches.size()].id;
        const int alpha =
            f_bundle.cocycle.patches[rng.next_u64() % f_bundle.cocycle.patches.size()].id;
        const CoverPatch patch = refined_patch(e_bundle, lambda, f_bundle.patch(alpha).membership,
                                               phi.eval);
        const auto candidates = sample_overlap({&patch}, 8, seed + 977 * static_cast<std::uint64_t>(k),
                                               false);
        if (candidates.empty())
            continue; // this refined patch is empty under phi; try another seed slot
        const Point center_point = candidates[rng.next_u64() % candidates.size()];

        const int chart_id = patch.regions.front().chart_id;
        if (!m->in_chart(chart_id, center_point))
            continue;
        const Vec center = m->chart(chart_id).to_local(center_point);

        // shrink the ball until it sits inside the refined patch and the chart
        double radius = 0.5;
        bool fits = false;
        for (int shrink = 0; shrink < 10 && !fits; ++shrink) {
            fits = true;
            for (int probe = 0; probe < 24; ++probe) {
                Vec offset = rng.vector(m->dim, -1.0, 1.0);
                if (offset.norm() < 1e-12)
                    offset.setConstant(1.0);
                offset *= radius / offset.norm();
                const Point q = m->chart(chart_id).to_embedded(center + offset);
                if (!m->chart(chart_id).domain_test(q) || !patch.contains(q)) {
                    fits = false;
                    break;
                }
            }
            if (!fits)
                radius *= 0.5;
        }
        if (!fits)
            continue;
        seeds.push_back(Seed{lambda, alpha, chart_id, center, radius,
                             rng.matrix(f_bundle.rank, e_bundle.rank, -2.0, 2.0)});
    }

    BundleMorphism result = zero_morphism(e_bundle, f_bundle, phi);
    if (seeds.empty())
        return result;

    const auto shared_seeds = std::make_shared<std::vector<Seed>>(std::move(seeds));
    const VectorBundle* ep = &e_bundle;
    const VectorBundle* fp = &f_bundle;
    for (auto& [key, fn] : result.locals) {
        const auto [lambda, alpha] = key;
        fn = [shared_seeds, ep, fp, m, lambda, alpha, eval = phi.eval](const Point& x) {
            Mat total = Mat::Zero(fp->rank, ep->rank);
            for (const auto& s : *shared_seeds) {
                if (!m->in_chart(s.chart_id, x))
                    continue;
                const double d2 = (m->chart(s.chart_id).to_local(x) - s.center).squaredNorm();
                const double w = expr::bump(d2, -s.radius * s.radius, s.radius * s.radius);
                if (w == 0.0)
                    continue;
                // transport the seed matrix from its home frame to (lambda, alpha)
                total += w * fp->theta(s.alpha, alpha, eval(x)) * s.matrix *
                         ep->theta(lambda, s.lambda, x);
            }
            return total;
        };
    }
    return result;
}

} // namespace vbm
