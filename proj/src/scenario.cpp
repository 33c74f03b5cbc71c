#include "vbm/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vbm {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

const Json& require_field(const Json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        fail(Errc::ParseError, where + ": missing field '" + key + "'");
    return *it;
}

Vec json_to_vec(const Json& arr) {
    Vec v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
        v[static_cast<int>(i)] = arr[i].get<double>();
    return v;
}

expr::EvalContext point_context(const Point& p) {
    expr::EvalContext ctx;
    for (int i = 0; i < p.size(); ++i)
        ctx.bind("x" + std::to_string(i), p[i]);
    return ctx;
}

// matrix of expression strings -> function of the base point
MatrixFn compile_matrix(const Json& rows, const std::string& where) {
    std::vector<std::vector<expr::ExprPtr>> parsed;
    for (const auto& row : rows) {
        std::vector<expr::ExprPtr> r;
        for (const auto& cell : row)
            r.push_back(expr::parse(cell.get<std::string>()));
        parsed.push_back(std::move(r));
    }
    if (parsed.empty())
        fail(Errc::ParseError, where + ": empty matrix");
    return [parsed](const Point& y) {
        const auto ctx = point_context(y);
        Mat m(static_cast<int>(parsed.size()), static_cast<int>(parsed[0].size()));
        for (std::size_t i = 0; i < parsed.size(); ++i)
            for (std::size_t j = 0; j < parsed[i].size(); ++j)
                m(static_cast<int>(i), static_cast<int>(j)) = expr::evaluate(parsed[i][j], ctx);
        return m;
    };
}

std::function<bool(const Point&)> compile_membership(const std::string& text) {
    const auto e = expr::parse(text);
    return [e](const Point& p) { return expr::evaluate(e, point_context(p)) > 0.0; };
}

} // namespace

bool Report::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckRecord& c) { return c.passed(); });
}

std::string emit_text(const Report& report) {
    std::ostringstream out;
    out << "vbmorph report\n";
    int passed = 0;
    for (const auto& c : report.checks) {
        out << "  " << (c.passed() ? "ok  " : "FAIL") << "  " << c.id << "  [" << c.anchor << "]"
            << "  residual=" << fmt(c.max_residual) << "  samples=" << c.samples;
        {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "  (%.1f ms)", c.elapsed_ms);
            out << buf;
        }
        if (!c.passed())
            out << "\n        " << c.status << ": " << c.detail;
        else if (!c.detail.empty())
            out << "\n        " << c.detail;
        out << "\n";
        passed += c.passed() ? 1 : 0;
    }
    out << report.checks.size() << " checks, " << passed << " passed\n";
    return out.str();
}

std::string emit_structured(const Report& report) {
    Json doc;
    doc["check_count"] = report.checks.size();
    doc["verdict"] = report.all_pass() ? "pass" : "fail";
    doc["checks"] = Json::array();
    for (const auto& c : report.checks) {
        Json item;
        item["id"] = c.id;
        item["kind"] = c.kind;
        item["anchor"] = c.anchor;
        item["status"] = c.status;
        item["max_residual"] = c.max_residual;
        item["samples"] = c.samples;
        item["detail"] = c.detail;
        doc["checks"].push_back(std::move(item));
    }
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// registries

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        fail(Errc::ParseError, "cannot open scenario file '" + path + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const std::exception& e) {
        fail(Errc::ParseError, std::string("invalid scenario: ") + e.what());
    }
    return from_json(doc);
}

Scenario Scenario::from_json(const Json& doc) {
    Scenario s;
    if (doc.contains("sampling")) {
        const auto& j = doc["sampling"];
        s.sampling.sample_count = j.value("sample_count", 256);
        s.sampling.seed = j.value("seed", 0ull);
    }
    if (doc.contains("tolerances")) {
        const auto& j = doc["tolerances"];
        s.tolerances.tol_alg = j.value("tol_alg", 1e-9);
        s.tolerances.tol_ode = j.value("tol_ode", 1e-6);
    }
    s.load_manifolds(doc);
    s.load_maps(doc);
    s.load_bundles(doc);
    s.load_morphisms(doc);
    s.load_connections(doc);
    s.load_regions(doc);
    s.load_sections(doc);
    s.load_suites(doc);
    return s;
}

const ManifoldModel& Scenario::manifold(const std::string& name) const {
    auto it = manifolds_.find(name);
    if (it == manifolds_.end())
        fail(Errc::UnresolvedReference, "manifold '" + name + "'");
    return *it->second;
}

const VectorBundle& Scenario::bundle(const std::string& name) const {
    auto it = bundles_.find(name);
    if (it == bundles_.end())
        fail(Errc::UnresolvedReference, "bundle '" + name + "'");
    return *it->second;
}

const SmoothMap& Scenario::map(const std::string& name) const {
    auto it = maps_.find(name);
    if (it == maps_.end())
        fail(Errc::UnresolvedReference, "map '" + name + "'");
    return it->second;
}

const BundleMorphism& Scenario::morphism(const std::string& name) const {
    auto it = morphisms_.find(name);
    if (it == morphisms_.end())
        fail(Errc::UnresolvedReference, "morphism '" + name + "'");
    return *it->second;
}

const Connection& Scenario::connection(const std::string& name) const {
    auto it = connections_.find(name);
    if (it == connections_.end())
        fail(Errc::UnresolvedReference, "connection '" + name + "'");
    return *it->second;
}

const SupportRegion& Scenario::region(const std::string& name) const {
    auto it = regions_.find(name);
    if (it == regions_.end())
        fail(Errc::UnresolvedReference, "region '" + name + "'");
    return it->second;
}

const TangentSection& Scenario::section(const std::string& name) const {
    auto it = sections_.find(name);
    if (it == sections_.end())
        fail(Errc::UnresolvedReference, "section '" + name + "'");
    return it->second;
}

std::vector<std::string> Scenario::check_ids() const {
    std::vector<std::string> ids;
    for (const auto& c : checks)
        ids.push_back(c.id);
    return ids;
}

void Scenario::load_manifolds(const Json& doc) {
    if (!doc.contains("manifolds"))
        return;
    for (const auto& [name, spec] : doc["manifolds"].items()) {
        if (manifolds_.count(name))
            fail(Errc::ParseError, "duplicate manifold '" + name + "'");
        ManifoldModel m;
        if (spec.is_string()) {
            m = make_manifold_by_name(spec.get<std::string>());
        } else {
            const std::string catalog = require_field(spec, "catalog", "manifold " + name);
            if (catalog == "euclidean")
                m = make_euclidean(require_field(spec, "dim", "manifold " + name).get<int>());
            else
                m = make_manifold_by_name(catalog);
        }
        manifolds_[name] = std::make_unique<ManifoldModel>(std::move(m));
    }
}

void Scenario::load_maps(const Json& doc) {
    if (!doc.contains("maps"))
        return;
    // multiple passes so compositions may reference maps in any order
    std::vector<std::pair<std::string, Json>> pending;
    for (const auto& [name, spec] : doc["maps"].items())
        pending.emplace_back(name, spec);

    bool progress = true;
    while (!pending.empty() && progress) {
        progress = false;
        for (auto it = pending.begin(); it != pending.end();) {
            const auto& [name, spec] = *it;
            const std::string kind = require_field(spec, "kind", "map " + name).get<std::string>();
            if (kind == "compose" && (!maps_.count(spec.value("outer", "")) ||
                                      !maps_.count(spec.value("inner", "")))) {
                ++it;
                continue;
            }
            SmoothMap built;
            const std::string where = "map " + name;
            if (kind == "identity") {
                built = identity_map(manifold(require_field(spec, "on", where).get<std::string>()));
            } else if (kind == "constant") {
                built = constant_map(manifold(require_field(spec, "source", where).get<std::string>()),
                                     manifold(require_field(spec, "target", where).get<std::string>()),
                                     json_to_vec(require_field(spec, "point", where)));
            } else if (kind == "circle_power") {
                built = circle_power_map(manifold(require_field(spec, "on", where).get<std::string>()),
                                         require_field(spec, "power", where).get<int>());
            } else if (kind == "circle_rotation") {
                built = circle_rotation(manifold(require_field(spec, "on", where).get<std::string>()),
                                        require_field(spec, "angle", where).get<double>());
            } else if (kind == "circle_bump_rotation") {
                built = circle_bump_rotation(
                    manifold(require_field(spec, "on", where).get<std::string>()),
                    require_field(spec, "amplitude", where).get<double>(),
                    require_field(spec, "lo", where).get<double>(),
                    require_field(spec, "hi", where).get<double>());
            } else if (kind == "equator_embedding") {
                built = equator_embedding(
                    manifold(require_field(spec, "source", where).get<std::string>()),
                    manifold(require_field(spec, "target", where).get<std::string>()));
            } else if (kind == "sphere_band_rotation") {
                built = sphere_band_rotation(
                    manifold(require_field(spec, "on", where).get<std::string>()),
                    require_field(spec, "amplitude", where).get<double>(),
                    require_field(spec, "lo", where).get<double>(),
                    require_field(spec, "hi", where).get<double>());
            } else if (kind == "torus_shift") {
                built = torus_shift(manifold(require_field(spec, "on", where).get<std::string>()),
                                    require_field(spec, "da", where).get<double>(),
                                    require_field(spec, "db", where).get<double>());
            } else if (kind == "expression") {
                std::vector<expr::ExprPtr> comps;
                for (const auto& c : require_field(spec, "components", where))
                    comps.push_back(expr::parse(c.get<std::string>()));
                built = expression_map(
                    manifold(require_field(spec, "source", where).get<std::string>()),
                    manifold(require_field(spec, "target", where).get<std::string>()),
                    std::move(comps), name);
            } else if (kind == "compose") {
                built = compose(map(require_field(spec, "outer", where).get<std::string>()),
                                map(require_field(spec, "inner", where).get<std::string>()));
            } else {
                fail(Errc::ParseError, where + ": unknown kind '" + kind + "'");
            }
            built.name = name;
            maps_[name] = std::move(built);
            it = pending.erase(it);
            progress = true;
        }
    }
    if (!pending.empty())
        fail(Errc::UnresolvedReference, "map '" + pending.front().first + "' has unresolved inputs");
}

void Scenario::load_bundles(const Json& doc) {
    if (!doc.contains("bundles"))
        return;
    for (const auto& [name, spec] : doc["bundles"].items()) {
        if (bundles_.count(name))
            fail(Errc::ParseError, "duplicate bundle '" + name + "'");
        const std::string where = "bundle " + name;
        VectorBundle built;
        if (spec.contains("catalog")) {
            const std::string catalog = spec["catalog"].get<std::string>();
            const ManifoldModel& base =
                manifold(require_field(spec, "base", where).get<std::string>());
            if (catalog == "trivial")
                built = make_trivial_bundle(base, require_field(spec, "rank", where).get<int>());
            else if (catalog == "mobius")
                built = make_mobius_bundle(base);
            else if (catalog == "ts2")
                built = make_tangent_sphere_bundle(base);
            else if (catalog == "tangent")
                built = make_tangent_bundle(base);
            else
                fail(Errc::ParseError, where + ": unknown catalog '" + catalog + "'");
        } else {
            const ManifoldModel& base =
                manifold(require_field(spec, "base", where).get<std::string>());
            built.base = &base;
            built.name = name;
            built.rank = require_field(spec, "rank", where).get<int>();
            for (const auto& pj : require_field(spec, "patches", where)) {
                CoverPatch patch;
                patch.id = require_field(pj, "id", where).get<int>();
                patch.base = &base;
                patch.membership =
                    compile_membership(require_field(pj, "membership", where).get<std::string>());
                if (pj.contains("chart")) {
                    SampleRegion region;
                    region.chart_id = pj["chart"].get<int>();
                    const auto& box = require_field(pj, "box", where);
                    region.lo = json_to_vec(box[0]);
                    region.hi = json_to_vec(box[1]);
                    patch.regions = {region};
                } else {
                    for (const auto& chart : base.charts)
                        patch.regions.push_back(
                            SampleRegion{chart.id, chart.sample_lo, chart.sample_hi});
                }
                built.cocycle.patches.push_back(std::move(patch));
            }
            for (const auto& tj : require_field(spec, "theta", where))
                built.cocycle.add(require_field(tj, "from", where).get<int>(),
                                  require_field(tj, "to", where).get<int>(),
                                  compile_matrix(require_field(tj, "matrix", where), where));
        }
        bundles_[name] = std::make_unique<VectorBundle>(std::move(built));
    }
}

void Scenario::load_morphisms(const Json& doc) {
    if (!doc.contains("morphisms"))
        return;
    // two passes: scale/add may reference earlier morphisms
    std::vector<std::pair<std::string, Json>> pending;
    for (const auto& [name, spec] : doc["morphisms"].items())
        pending.emplace_back(name, spec);

    bool progress = true;
    while (!pending.empty() && progress) {
        progress = false;
        for (auto it = pending.begin(); it != pending.end();) {
            const auto& [name, spec] = *it;
            const std::string where = "morphism " + name;
            const std::string kind = require_field(spec, "kind", where).get<std::string>();
            if ((kind == "scale" && !morphisms_.count(spec.value("of", ""))) ||
                (kind == "add" && (!morphisms_.count(spec.value("lhs", "")) ||
                                   !morphisms_.count(spec.value("rhs", ""))))) {
                ++it;
                continue;
            }
            BundleMorphism built;
            if (kind == "zero") {
                built = zero_morphism(bundle(require_field(spec, "source", where).get<std::string>()),
                                      bundle(require_field(spec, "target", where).get<std::string>()),
                                      map(require_field(spec, "map", where).get<std::string>()));
            } else if (kind == "differential") {
                const SmoothMap& of = map(require_field(spec, "of", where).get<std::string>());
                const VectorBundle& tm =
                    spec.contains("source")
                        ? bundle(spec["source"].get<std::string>())
                        : *bundles_
                               .emplace("T(" + of.source->name + ")#" + name,
                                        std::make_unique<VectorBundle>(make_tangent_bundle(*of.source)))
                               .first->second;
                const VectorBundle& tn =
                    spec.contains("target")
                        ? bundle(spec["target"].get<std::string>())
                        : *bundles_
                               .emplace("T(" + of.target->name + ")#" + name,
                                        std::make_unique<VectorBundle>(make_tangent_bundle(*of.target)))
                               .first->second;
                built = differential_morphism(tm, tn, of);
            } else if (kind == "random") {
                built = random_morphism(bundle(require_field(spec, "source", where).get<std::string>()),
                                        bundle(require_field(spec, "target", where).get<std::string>()),
                                        map(require_field(spec, "map", where).get<std::string>()),
                                        spec.value("seed", 1ull), spec.value("seeds", 3));
            } else if (kind == "phi_shriek") {
                const VectorBundle& f = bundle(require_field(spec, "bundle", where).get<std::string>());
                const SmoothMap& phi = map(require_field(spec, "map", where).get<std::string>());
                auto pb = std::make_shared<PullbackBundle>(pullback_bundle(f, phi));
                owned_pullbacks_.push_back(pb);
                built = phi_shriek_morphism(*pb);
            } else if (kind == "locals") {
                built.source = &bundle(require_field(spec, "source", where).get<std::string>());
                built.target = &bundle(require_field(spec, "target", where).get<std::string>());
                built.base_map = map(require_field(spec, "map", where).get<std::string>());
                for (const auto& lj : require_field(spec, "locals", where)) {
                    const auto& pair = require_field(lj, "patch_pair", where);
                    built.locals[{pair[0].get<int>(), pair[1].get<int>()}] =
                        compile_matrix(require_field(lj, "matrix", where), where);
                }
            } else if (kind == "scale") {
                built = morphism_scale(require_field(spec, "factor", where).get<double>(),
                                       morphism(require_field(spec, "of", where).get<std::string>()));
            } else if (kind == "add") {
                built = morphism_add(morphism(require_field(spec, "lhs", where).get<std::string>()),
                                     morphism(require_field(spec, "rhs", where).get<std::string>()));
            } else {
                fail(Errc::ParseError, where + ": unknown kind '" + kind + "'");
            }
            morphisms_[name] = std::make_unique<BundleMorphism>(std::move(built));
            it = pending.erase(it);
            progress = true;
        }
    }
    if (!pending.empty())
        fail(Errc::UnresolvedReference,
             "morphism '" + pending.front().first + "' has unresolved inputs");
}

void Scenario::load_connections(const Json& doc) {
    if (!doc.contains("connections"))
        return;
    for (const auto& [name, spec] : doc["connections"].items()) {
        const std::string where = "connection " + name;
        const std::string kind = require_field(spec, "kind", where).get<std::string>();
        const VectorBundle& b = bundle(require_field(spec, "bundle", where).get<std::string>());
        Connection built;
        if (kind == "flat") {
            built = flat_connection(b);
        } else if (kind == "levi_civita") {
            built = levi_civita_sphere(b);
        } else if (kind == "forms") {
            built.bundle = &b;
            for (const auto& fj : require_field(spec, "forms", where)) {
                const int patch = require_field(fj, "patch", where).get<int>();
                // entries are expressions in the base point x0.. and the
                // direction components w0..
                std::vector<std::vector<expr::ExprPtr>> parsed;
                for (const auto& row : require_field(fj, "matrix", where)) {
                    std::vector<expr::ExprPtr> r;
                    for (const auto& cell : row)
                        r.push_back(expr::parse(cell.get<std::string>()));
                    parsed.push_back(std::move(r));
                }
                built.forms[patch] = [parsed](const Point& y, const Vec& w) {
                    auto ctx = point_context(y);
                    for (int i = 0; i < w.size(); ++i)
                        ctx.bind("w" + std::to_string(i), w[i]);
                    Mat m(static_cast<int>(parsed.size()), static_cast<int>(parsed[0].size()));
                    for (std::size_t i = 0; i < parsed.size(); ++i)
                        for (std::size_t j = 0; j < parsed[i].size(); ++j)
                            m(static_cast<int>(i), static_cast<int>(j)) =
                                expr::evaluate(parsed[i][j], ctx);
                    return m;
                };
            }
        } else {
            fail(Errc::ParseError, where + ": unknown kind '" + kind + "'");
        }
        connections_[name] = std::make_unique<Connection>(std::move(built));
    }
}

void Scenario::load_regions(const Json& doc) {
    if (!doc.contains("regions"))
        return;
    for (const auto& [name, spec] : doc["regions"].items()) {
        const std::string where = "region " + name;
        const ManifoldModel& m = manifold(require_field(spec, "manifold", where).get<std::string>());
        if (spec.value("kind", "box") == "whole") {
            regions_[name] = SupportRegion::whole(m);
        } else {
            const auto& box = require_field(spec, "box", where);
            regions_[name] = SupportRegion::chart_box(m, spec.value("chart", 0),
                                                      json_to_vec(box[0]), json_to_vec(box[1]));
        }
    }
}

void Scenario::load_sections(const Json& doc) {
    if (!doc.contains("sections"))
        return;
    for (const auto& [name, spec] : doc["sections"].items()) {
        const std::string where = "section " + name;
        const std::string kind = spec.value("kind", "chart_forward");
        if (kind == "chart_forward") {
            sections_[name] = chart_forward(
                map(require_field(spec, "center", where).get<std::string>()),
                map(require_field(spec, "target", where).get<std::string>()),
                region(require_field(spec, "support", where).get<std::string>()),
                sampling.sample_count, sampling.seed);
        } else if (kind == "expression") {
            const SmoothMap& base = map(require_field(spec, "base_map", where).get<std::string>());
            std::vector<expr::ExprPtr> comps;
            for (const auto& c : require_field(spec, "components", where))
                comps.push_back(expr::parse(c.get<std::string>()));
            TangentSection s;
            s.base_map = base;
            s.support = region(require_field(spec, "support", where).get<std::string>());
            s.values = [n = base.target, eval = base.eval, comps](const Point& x) {
                const auto ctx = point_context(x);
                Vec c(static_cast<int>(comps.size()));
                for (std::size_t i = 0; i < comps.size(); ++i)
                    c[static_cast<int>(i)] = expr::evaluate(comps[i], ctx);
                const Point y = eval(x);
                return TangentVector{y, c, n->canonical_chart(y)};
            };
            sections_[name] = std::move(s);
        } else {
            fail(Errc::ParseError, where + ": unknown kind '" + kind + "'");
        }
    }
}

void Scenario::load_suites(const Json& doc) {
    if (!doc.contains("suites"))
        return;
    std::set<std::string> seen;
    for (const auto& cj : doc["suites"]) {
        Check check;
        check.id = require_field(cj, "id", "suite entry").get<std::string>();
        check.kind = require_field(cj, "kind", "suite entry").get<std::string>();
        check.params = cj;
        if (!seen.insert(check.id).second)
            fail(Errc::ParseError, "duplicate check id '" + check.id + "'");
        checks.push_back(std::move(check));
    }
}

// ---------------------------------------------------------------------------
// check execution

namespace {

struct CheckContext {
    const Scenario& scenario;
    const Json& params;
    int samples;
    std::uint64_t seed;
    double tol_alg;
    double tol_ode;

    std::string str(const std::string& key) const {
        return require_field(params, key, "check").get<std::string>();
    }
};

std::string anchor_for(const std::string& kind) {
    if (kind == "cocycle")
        return "transition-function cocycle conditions";
    if (kind == "pullback_cocycle")
        return "pullback bundle induced cocycle";
    if (kind == "pullback_local_form")
        return "pullback canonical morphism local form";
    if (kind == "pullback_naturality")
        return "pullback functoriality under composition";
    if (kind == "morphism_compatibility")
        return "local matrix family of a bundle morphism";
    if (kind == "morphism_linearity")
        return "fibrewise linearity of a bundle morphism";
    if (kind == "correspondence_roundtrip")
        return "correspondence between morphisms over a map and over the identity";
    if (kind == "correspondence_linearity")
        return "linearity of the morphism correspondence";
    if (kind == "chart_roundtrip")
        return "exponential chart on the mapping space";
    if (kind == "chart_change_cocycle")
        return "chart changes of the mapping-space atlas";
    if (kind == "homotopy_endpoints")
        return "geodesic homotopy between nearby maps";
    if (kind == "section_support")
        return "compact support of tangent sections";
    if (kind == "connection_gauge")
        return "gauge compatibility of connection forms";
    if (kind == "transport_great_circle")
        return "parallel transport against the great-circle rotation";
    if (kind == "transport_properties")
        return "linearity and reversibility of homotopy transport";
    if (kind == "trivialization_roundtrip")
        return "trivialization of the morphism bundle";
    if (kind == "trivialization_linearity")
        return "fibrewise linearity of the morphism-bundle trivialization";
    if (kind == "projection_triangle")
        return "projection commutes with the trivialization";
    if (kind == "transition_consistency")
        return "transitions between morphism-bundle trivializations";
    if (kind == "rigidity")
        return "rigidity of compactly supported linear perturbations";
    if (kind == "compact_perturbation")
        return "forced equality under the fibre scaling argument";
    return "unnamed check";
}

void run_cocycle(const CheckContext& ctx, CheckRecord& rec) {
    const auto report =
        validate_cocycle(ctx.scenario.bundle(ctx.str("bundle")), ctx.samples, ctx.seed, ctx.tol_alg);
    rec.max_residual = report.max_residual;
    rec.samples = report.samples;
    rec.status = report.pass ? "pass" : "fail";
    std::string detail;
    for (const auto& [label, value] : report.components)
        detail += label + "=" + fmt(value) + " ";
    rec.detail = detail;
}

void run_pullback_cocycle(const CheckContext& ctx, CheckRecord& rec) {
    const PullbackBundle pb =
        pullback_bundle(ctx.scenario.bundle(ctx.str("bundle")), ctx.scenario.map(ctx.str("map")));
    const auto report = validate_cocycle(pb.bundle, ctx.samples, ctx.seed, ctx.tol_alg);
    rec.max_residual = report.max_residual;
    rec.samples = report.samples;
    rec.status = report.pass ? "pass" : "fail";
}

void run_pullback_local_form(const CheckContext& ctx, CheckRecord& rec) {
    const PullbackBundle pb =
        pullback_bundle(ctx.scenario.bundle(ctx.str("bundle")), ctx.scenario.map(ctx.str("map")));
    Rng rng(ctx.seed);
    double residual = 0.0;
    int used = 0;
    for (const auto& patch : pb.bundle.cocycle.patches) {
        const auto points = sample_overlap({&patch}, ctx.samples / 2 + 1, ctx.seed, false);
        for (const auto& x : points) {
            const Vec u = rng.vector(pb.rank(), -2.0, 2.0);
            const BundleElement element{patch.id, x, u};
            // in the refined trivializations the canonical morphism is
            // (x, u) -> (phi(x), u)
            const auto triv = pullback_trivialization(pb, nullptr, patch.id, patch.id, element);
            residual = std::max(residual, (triv.second - u).norm());
            const BundleElement image = phi_shriek(pb, element);
            residual = std::max(residual, (image.fiber - u).norm());
            residual = std::max(residual, (image.base_point - pb.map(x)).norm());
            const BundleElement back = phi_shriek_fibre_inverse(pb, x, image);
            residual = std::max(residual, (back.fiber - u).norm());
            ++used;
        }
    }
    rec.max_residual = residual;
    rec.samples = used;
    rec.status = residual < ctx.tol_alg ? "pass" : "fail";
}

void run_pullback_naturality(const CheckContext& ctx, CheckRecord& rec) {
    const VectorBundle& f = ctx.scenario.bundle(ctx.str("bundle"));
    const SmoothMap& outer = ctx.scenario.map(ctx.str("outer"));
    const SmoothMap& inner = ctx.scenario.map(ctx.str("inner"));
    const PullbackBundle composed = pullback_bundle(f, compose(outer, inner));
    const PullbackBundle outer_pb = pullback_bundle(f, outer);
    const PullbackBundle nested = pullback_bundle(outer_pb.bundle, inner);
    double residual = 0.0;
    int used = 0;
    for (const auto& [key, entry] : composed.bundle.cocycle.entries) {
        const auto points =
            sample_overlap({&composed.bundle.patch(key.first), &composed.bundle.patch(key.second)},
                           ctx.samples, ctx.seed, false);
        for (const auto& x : points) {
            residual = std::max(residual, (composed.bundle.theta(key.first, key.second, x) -
                                           nested.bundle.theta(key.first, key.second, x))
                                              .cwiseAbs()
                                              .maxCoeff());
            ++used;
        }
    }
    rec.max_residual = residual;
    rec.samples = used;
    rec.status = residual < ctx.tol_alg ? "pass" : "fail";
}

void run_morphism_compatibility(const CheckContext& ctx, CheckRecord& rec) {
    const auto report = check_overlap_compatibility(ctx.scenario.morphism(ctx.str("morphism")),
                                                    ctx.samples, ctx.seed, ctx.tol_alg);
    rec.max_residual = report.max_residual;
    rec.samples = report.samples;
    rec.status = report.pass ? "pass" : "fail";
}

std::vector<BundleElement> sample_elements(const BundleMorphism& morphism, int count,
                                           std::uint64_t seed, double fiber_scale = 2.0) {
    std::vector<BundleElement> elements;
    Rng rng(seed);
    const auto points = morphism.source->base->sample_points(count, seed);
    for (const auto& x : points) {
        int patch = -1;
        for (const auto& p : morphism.source->cocycle.patches)
            if (p.contains(x)) {
                patch = p.id;
                break;
            }
        if (patch < 0)
            continue;
        elements.push_back(
            BundleElement{patch, x, rng.vector(morphism.source->rank, -fiber_scale, fiber_scale)});
    }
    return elements;
}

void run_morphism_linearity(const CheckContext& ctx, CheckRecord& rec) {
    const BundleMorphism& morphism = ctx.scenario.morphism(ctx.str("morphism"));
    Rng rng(ctx.seed + 1);
    double residual = 0.0;
    const auto elements = sample_elements(morphism, ctx.samples, ctx.seed);
    for (const auto& element : elements) {
        const Vec v = rng.vector(morphism.source->rank, -2.0, 2.0);
        const double a = rng.uniform(-10.0, 10.0), b = rng.uniform(-10.0, 10.0);
        BundleElement combo = element;
        combo.fiber = a * element.fiber + b * v;
        const Vec lhs = evaluate(morphism, combo).fiber;
        BundleElement other = element;
        other.fiber = v;
        const Vec rhs =
            a * evaluate(morphism, element).fiber + b * evaluate(morphism, other).fiber;
        residual = std::max(residual, (lhs - rhs).cwiseAbs().maxCoeff());
    }
    rec.max_residual = residual;
    rec.samples = static_cast<int>(elements.size());
    rec.status = residual < ctx.tol_alg ? "pass" : "fail";
}

void run_correspondence_roundtrip(const CheckContext& ctx, CheckRecord& rec) {
    const BundleMorphism& morphism = ctx.scenario.morphism(ctx.str("morphism"));
    const MorphismOverIdentity over_id = morph_to_identity(morphism);
    const BundleMorphism back = identity_to_morph(over_id);

    double local_residual = 0.0, eval_residual = 0.0;
    const auto elements = sample_elements(morphism, ctx.samples, ctx.seed);
    const VectorBundle& f = *morphism.target;
    for (const auto& element : elements) {
        // local data roundtrip is a re-indexing: exact
        for (const auto& [key, fn] : morphism.locals)
            if (morphism.in_refined_patch(key.first, key.second, element.base_point))
                local_residual = std::max(
                    local_residual, (fn(element.base_point) - back.locals.at(key)(element.base_point))
                                        .cwiseAbs()
                                        .maxCoeff());
        // evaluation route: phi_shriek composed with the identity morphism
        const BundleElement direct = evaluate(morphism, element);
        const BundleElement through = phi_shriek(*over_id.target, evaluate_identity(over_id, element));
        const Vec aligned = f.theta(through.patch_id, direct.patch_id, direct.base_point) * through.fiber;
        eval_residual = std::max(eval_residual, (aligned - direct.fiber).cwiseAbs().maxCoeff());
        // defining property: the identity-side value is the fibrewise inverse
        // of the canonical morphism applied to the direct value
        const BundleElement inverse = phi_shriek_fibre_inverse(
            *over_id.target, element.base_point,
            BundleElement{direct.patch_id, direct.base_point, direct.fiber});
        const BundleElement id_side = evaluate_identity(over_id, element);
        const Vec aligned2 =
            over_id.target->bundle.theta(inverse.patch_id, id_side.patch_id, element.base_point) *
            inverse.fiber;
        eval_residual = std::max(eval_residual, (aligned2 - id_side.fiber).cwiseAbs().maxCoeff());
    }
    rec.max_residual = std::max(local_residual, eval_residual);
    rec.samples = static_cast<int>(elements.size());
    rec.status = (local_residual == 0.0 && eval_residual < ctx.tol_alg) ? "pass" : "fail";
    rec.detail = "locals=" + fmt(local_residual) + " (exact) evaluation=" + fmt(eval_residual);
}

void run_correspondence_linearity(const CheckContext& ctx, CheckRecord& rec) {
    const BundleMorphism& m1 = ctx.scenario.morphism(ctx.str("lhs"));
    const BundleMorphism& m2 = ctx.scenario.morphism(ctx.str("rhs"));
    Rng rng(ctx.seed + 2);
    const double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0);
    const BundleMorphism combo = morphism_add(morphism_scale(a, m1), morphism_scale(b, m2));
    const MorphismOverIdentity left = morph_to_identity(combo);
    const MorphismOverIdentity r1 = morph_to_identity(m1);
    const MorphismOverIdentity r2 = morph_to_identity(m2);
    double residual = 0.0;
    int used = 0;
    const auto points = m1.source->base->sample_points(ctx.samples, ctx.seed);
    for (const auto& x : points)
        for (const auto& [key, fn] : left.locals) {
            if (!left.in_refined_patch(key.first, key.second, x))
                continue;
            const Mat lhs = left.local_matrix(key.first, key.second, x);
            const Mat rhs = a * r1.local_matrix(key.first, key.second, x) +
                            b * r2.local_matrix(key.first, key.second, x);
            residual = std::max(residual, (lhs - rhs).cwiseAbs().maxCoeff());
            ++used;
        }
    rec.max_residual = residual;
    rec.samples = used;
    rec.status = residual < ctx.tol_alg ? "pass" : "fail";
}

void run_chart_roundtrip(const CheckContext& ctx, CheckRecord& rec) {
    const SmoothMap& center = ctx.scenario.map(ctx.str("center"));
    const SmoothMap& target = ctx.scenario.map(ctx.str("target"));
    const SupportRegion& support = ctx.scenario.region(ctx.str("support"));
    const double tol = ctx.params.value("tol", ctx.tol_ode);

    const TangentSection section = chart_forward(center, target, support, ctx.samples, ctx.seed);
    const SmoothMap recovered = chart_inverse(section);
    const TangentSection second = chart_forward(center, recovered, support, ctx.samples, ctx.seed);

    const ManifoldModel& n = *center.target;
    double map_residual = 0.0, support_residual = 0.0, section_residual = 0.0;
    const auto points = center.source->sample_points(ctx.samples, ctx.seed);
    for (const auto& x : points) {
        map_residual = std::max(map_residual, n.distance(recovered(x), target(x)));
        const TangentVector s1 = section(x);
        const TangentVector s2 = second(x);
        if (s1.chart_id == s2.chart_id)
            section_residual =
                std::max(section_residual, (s1.components - s2.components).cwiseAbs().maxCoeff());
        if (!support.inside(x))
            support_residual = std::max(support_residual, n.metric_norm(s1));
    }
    rec.max_residual = std::max({map_residual, section_residual, support_residual});
    rec.samples = static_cast<int>(points.size());
    rec.status = (map_residual < tol && section_residual < tol &&
                  support_residual < ctx.tol_alg)
                     ? "pass"
                     : "fail";
    rec.detail = "inverse=" + fmt(map_residual) + " forward=" + fmt(section_residual) +
                 " support=" + fmt(support_residual);
}

void run_chart_change_cocycle(const CheckContext& ctx, CheckRecord& rec) {
    const auto& centers = require_field(ctx.params, "centers", "chart_change_cocycle");
    const SmoothMap& a = ctx.scenario.map(centers[0].get<std::string>());
    const SmoothMap& b = ctx.scenario.map(centers[1].get<std::string>());
    const SmoothMap& c = ctx.scenario.map(centers[2].get<std::string>());
    const SmoothMap& target = ctx.scenario.map(ctx.str("target"));
    const SupportRegion& support = ctx.scenario.region(ctx.str("support"));

    const TangentSection s_c = chart_forward(c, target, support, ctx.samples, ctx.seed);
    const TangentSection direct = chart_change(a, c, s_c, ctx.samples, ctx.seed);
    const TangentSection via =
        chart_change(a, b, chart_change(b, c, s_c, ctx.samples, ctx.seed), ctx.samples, ctx.seed);

    double residual = 0.0;
    const auto points = a.source->sample_points(ctx.samples, ctx.seed);
    for (const auto& x : points) {
        const TangentVector v1 = direct(x), v2 = via(x);
        if (v1.chart_id == v2.chart_id)
            residual = std::max(residual, (v1.components - v2.components).cwiseAbs().maxCoeff());
        else
            residual = std::max(residual, (a.target->tangent_to_embedded(v1) -
                                           a.target->tangent_to_embedded(v2))
                                              .cwiseAbs()
                                              .maxCoeff());
    }
    rec.max_residual = residual;
    rec.samples = static_cast<int>(points.size());
    rec.status = residual < ctx.tol_ode ? "pass" : "fail";
}

void run_homotopy_endpoints(const CheckContext& ctx, CheckRecord& rec) {
    const SmoothMap& center = ctx.scenario.map(ctx.str("center"));
    const SmoothMap& target = ctx.scenario.map(ctx.str("target"));
    const SupportRegion& support = ctx.scenario.region(ctx.str("support"));
    const TangentSection section = chart_forward(center, target, support, ctx.samples, ctx.seed);

    const ManifoldModel& n = *center.target;
    const SmoothMap at0 = homotopy(section, 0.0);
    const SmoothMap at1 = homotopy(section, 1.0);
    double endpoint_residual = 0.0;
    const auto points = center.source->sample_points(ctx.samples, ctx.seed);
    for (const auto& x : points) {
        endpoint_residual = std::max(endpoint_residual, n.distance(at0(x), center(x)));
        endpoint_residual = std::max(endpoint_residual, n.distance(at1(x), target(x)));
    }

    // continuity proxy: the step distance decays linearly in delta
    auto step_distance = [&](double delta) {
        const SmoothMap lo = homotopy(section, 0.5);
        const SmoothMap hi = homotopy(section, 0.5 + delta);
        double d = 0.0;
        for (const auto& x : points)
            d = std::max(d, n.distance(lo(x), hi(x)));
        return d;
    };
    const double d2 = step_distance(1e-2), d3 = step_distance(1e-3), d4 = step_distance(1e-4);
    const bool linear_decay = d3 <= 0.2 * d2 + 1e-9 && d4 <= 0.2 * d3 + 1e-9;

    rec.max_residual = endpoint_residual;
    rec.samples = static_cast<int>(points.size());
    rec.status = (endpoint_residual < ctx.tol_ode && linear_decay) ? "pass" : "fail";
    rec.detail = "endpoints=" + fmt(endpoint_residual) + " steps=" + fmt(d2) + "/" + fmt(d3) + "/" +
                 fmt(d4);
}

void run_section_support(const CheckContext& ctx, CheckRecord& rec) {
    const TangentSection& section = ctx.scenario.section(ctx.str("section"));
    const ManifoldModel& n = *section.base_map.target;
    double residual = 0.0;
    const auto points = section.base_map.source->sample_points(ctx.samples, ctx.seed);
    for (const auto& x : points)
        if (!section.support.inside(x))
            residual = std::max(residual, n.metric_norm(section(x)));
    rec.max_residual = residual;
    rec.samples = static_cast<int>(points.size());
    rec.status = residual < ctx.tol_alg ? "pass" : "fail";
}

void run_connection_gauge(const CheckContext& ctx, CheckRecord& rec) {
    const auto report = validate_connection(ctx.scenario.connection(ctx.str("connection")),
                                            ctx.samples, ctx.seed, ctx.params.value("tol", 1e-5));
    rec.max_residual = report.max_residual;
    rec.samples = report.samples;
    rec.status = report.pass ? "pass" : "fail";
}

void run_transport_great_circle(const CheckContext& ctx, CheckRecord& rec) {
    const Connection& connection = ctx.scenario.connection(ctx.str("connection"));
    const VectorBundle& bundle = *connection.bundle;
    const ManifoldModel& sphere = *bundle.base;
    if (sphere.name != "sphere2")
        fail(Errc::BaseMismatch, "great-circle oracle requires the sphere catalog entry");

    const int steps = 128;
    std::vector<Point> path;
    for (int i = 0; i <= steps; ++i) {
        const double t = 0.5 * std::numbers::pi * i / steps;
        Point p(3);
        p << std::sin(t), 0.0, std::cos(t);
        path.push_back(p);
    }
    const TransportResult transport = parallel_transport(connection, path);

    // closed form: rotation by pi/2 about the y axis carries the start frame
    Mat rot(3, 3);
    rot << 0, 0, 1, 0, 1, 0, -1, 0, 0;

    const Point start = path.front(), end = path.back();
    const Mat j_start = sphere.embed_jacobian_at(transport.start_patch,
                                                 sphere.chart(transport.start_patch).to_local(start));
    const Mat j_end =
        sphere.embed_jacobian_at(transport.end_patch, sphere.chart(transport.end_patch).to_local(end));

    Rng rng(ctx.seed);
    double residual = 0.0;
    const int vectors = ctx.samples >= 1 ? ctx.samples : 128;
    for (int i = 0; i < vectors; ++i) {
        const Vec v = rng.vector(2, -2.0, 2.0);
        const Vec expected_embedded = rot * (j_start * v);
        const Vec expected = j_end.colPivHouseholderQr().solve(expected_embedded);
        residual = std::max(residual, (transport.apply(v) - expected).cwiseAbs().maxCoeff());
    }
    rec.max_residual = residual;
    rec.samples = vectors;
    rec.status = residual < ctx.params.value("tol", 1e-5) ? "pass" : "fail";
}

void run_transport_properties(const CheckContext& ctx, CheckRecord& rec) {
    const Connection& connection = ctx.scenario.connection(ctx.str("connection"));
    const SmoothMap& center = ctx.scenario.map(ctx.str("center"));
    const SmoothMap& target = ctx.scenario.map(ctx.str("target"));
    const SupportRegion& support = ctx.scenario.region(ctx.str("support"));
    const TangentSection section = chart_forward(center, target, support, ctx.samples, ctx.seed);

    TangentSection zero = section;
    zero.values = [n = center.target, eval = center.eval](const Point& x) {
        const Point y = eval(x);
        const int chart = n->canonical_chart(y);
        return TangentVector{y, Vec::Zero(n->dim), chart};
    };

    const ManifoldModel& n = *center.target;
    Rng rng(ctx.seed);
    double reversal = 0.0, identity_exact = 0.0, linearity = 0.0;
    const int count = std::min(ctx.samples, 64);
    const auto points = center.source->sample_points(count, ctx.seed);
    const int rank = connection.bundle->rank;
    for (const auto& x : points) {
        const TransportResult h = homotopy_transport_map(connection, section, x);
        // reversal composes to the identity
        const TangentVector v = section(x);
        if (n.metric_norm(v) > 1e-15) {
            std::vector<Point> path;
            for (int i = 0; i <= 128; ++i) {
                TangentVector scaled = v;
                scaled.components *= static_cast<double>(i) / 128;
                path.push_back(n.exp(scaled));
            }
            std::vector<Point> reversed(path.rbegin(), path.rend());
            const TransportResult back = parallel_transport(connection, reversed);
            reversal = std::max(reversal, (back.linear_map * h.linear_map - Mat::Identity(rank, rank))
                                              .cwiseAbs()
                                              .maxCoeff());
        }
        // zero section transports by the exact identity
        const TransportResult h0 = homotopy_transport_map(connection, zero, x);
        identity_exact = std::max(identity_exact, (h0.linear_map - Mat::Identity(rank, rank))
                                                      .cwiseAbs()
                                                      .maxCoeff());
        // fibrewise linearity of the transport map
        const Vec u1 = rng.vector(rank, -2.0, 2.0), u2 = rng.vector(rank, -2.0, 2.0);
        const double a = rng.uniform(-5.0, 5.0), b = rng.uniform(-5.0, 5.0);
        linearity = std::max(linearity, (h.apply(a * u1 + b * u2) - a * h.apply(u1) - b * h.apply(u2))
                                            .cwiseAbs()
                                            .maxCoeff());
    }
    rec.max_residual = std::max({reversal, linearity});
    rec.samples = static_cast<int>(points.size());
    rec.status =
        (reversal < ctx.tol_ode && linearity < ctx.tol_ode && identity_exact == 0.0) ? "pass" : "fail";
    rec.detail = "reversal=" + fmt(reversal) + " linearity=" + fmt(linearity) +
                 " identity=" + fmt(identity_exact) + " (exact)";
}

MorphElement element_for(const CheckContext& ctx, const std::string& key) {
    const BundleMorphism& morphism = ctx.scenario.morphism(ctx.params[key].get<std::string>());
    return MorphElement{morphism.base_map, morphism};
}

void run_trivialization_roundtrip(const CheckContext& ctx, CheckRecord& rec) {
    const SmoothMap& center = ctx.scenario.map(ctx.str("center"));
    const Connection& connection = ctx.scenario.connection(ctx.str("connection"));
    const SupportRegion& support = ctx.scenario.region(ctx.str("support"));
    const MorphElement element = element_for(ctx, "morphism");

    const TrivializedPair pair =
        trivialize_T(center, connection, element, support, ctx.samples, ctx.seed);
    const MorphElement back = detrivialize_T(center, connection, pair);

    const ManifoldModel& n = *center.target;
    double base_residual = 0.0, fibre_residual = 0.0;
    const int count = std::min(ctx.samples, 96);
    const auto points = center.source->sample_points(count, ctx.seed);
    for (const auto& x : points) {
        base_residual = std::max(base_residual, n.distance(back.base(x), element.base(x)));
        for (const auto& [key, fn] : element.fibre.locals) {
            if (!element.fibre.in_refined_patch(key.first, key.second, x) ||
                !back.fibre.in_refined_patch(key.first, key.second, x))
                continue;
            fibre_residual =
                std::max(fibre_residual, (back.fibre.local_matrix(key.first, key.second, x) -
                                          element.fibre.local_matrix(key.first, key.second, x))
                                             .cwiseAbs()
                                             .maxCoeff());
        }
    }
    rec.max_residual = std::max(base_residual, fibre_residual);
    rec.samples = static_cast<int>(points.size());
    rec.status = rec.max_residual < ctx.tol_ode ? "pass" : "fail";
    rec.detail = "base=" + fmt(base_residual) + " fibre=" + fmt(fibre_residual);
}

void run_trivialization_linearity(const CheckContext& ctx, CheckRecord& rec) {
    const SmoothMap& center = ctx.scenario.map(ctx.str("center"));
    const Connection& connection = ctx.scenario.connection(ctx.str("connection"));
    const SupportRegion& support = ctx.scenario.region(ctx.str("support"));
    const BundleMorphism& m1 = ctx.scenario.morphism(ctx.str("lhs"));
    const BundleMorphism& m2 = ctx.scenario.morphism(ctx.str("rhs"));
    Rng rng(ctx.seed + 3);
    const double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0);

    const BundleMorphism combo = morphism_add(morphism_scale(a, m1), morphism_scale(b, m2));
    const TrivializedPair p_combo = trivialize_T(center, connection, {combo.base_map, combo}, support,
                                                 ctx.samples, ctx.seed);
    const TrivializedPair p1 =
        trivialize_T(center, connection, {m1.base_map, m1}, support, ctx.samples, ctx.seed);
    const TrivializedPair p2 =
        trivialize_T(center, connection, {m2.base_map, m2}, support, ctx.samples, ctx.seed);

    double residual = 0.0;
    int used = 0;
    const int count = std::min(ctx.samples, 64);
    const auto points = center.source->sample_points(count, ctx.seed);
    for (const auto& x : points)
        for (const auto& [key, fn] : p_combo.fibre_coords.locals) {
            if (!p_combo.fibre_coords.in_refined_patch(key.first, key.second, x))
                continue;
            const Mat lhs = p_combo.fibre_coords.local_matrix(key.first, key.second, x);
            const Mat rhs = a * p1.fibre_coords.local_matrix(key.first, key.second, x) +
                            b * p2.fibre_coords.local_matrix(key.first, key.second, x);
            residual = std::max(residual, (lhs - rhs).cwiseAbs().maxCoeff());
            ++used;
        }
    rec.max_residual = residual;
    rec.samples = used;
    rec.status = residual < ctx.tol_ode ? "pass" : "fail";
}

void run_projection_triangle(const CheckContext& ctx, CheckRecord& rec) {
    const SmoothMap& center = ctx.scenario.map(ctx.str("center"));
    const Connection& connection = ctx.scenario.connection(ctx.str("connection"));
    const SupportRegion& support = ctx.scenario.region(ctx.str("support"));
    const MorphElement element = element_for(ctx, "morphism");
    const TrivializedPair pair =
        trivialize_T(center, connection, element, support, ctx.samples, ctx.seed);

    double residual = 0.0;
    const auto points = center.source->sample_points(ctx.samples, ctx.seed);
    for (const auto& x : points)
        residual = std::max(residual, (project(pair)(x) - project(element)(x)).norm());
    rec.max_residual = residual;
    rec.samples = static_cast<int>(points.size());
    rec.status = residual == 0.0 ? "pass" : "fail";
    rec.detail = "projection preserved exactly";
}

void run_transition_consistency(const CheckContext& ctx, CheckRecord& rec) {
    const SmoothMap& phi = ctx.scenario.map(ctx.str("center_a"));
    const SmoothMap& psi = ctx.scenario.map(ctx.str("center_b"));
    const Connection& connection = ctx.scenario.connection(ctx.str("connection"));
    const SupportRegion& support = ctx.scenario.region(ctx.str("support"));
    const MorphElement element = element_for(ctx, "morphism");

    const TrivializedPair over_psi =
        trivialize_T(psi, connection, element, support, ctx.samples, ctx.seed);
    const TrivializedPair direct =
        trivialize_T(phi, connection, element, support, ctx.samples, ctx.seed);
    const TrivializedPair via = transition_T(phi, psi, connection, over_psi, ctx.samples, ctx.seed);
    const TrivializedPair roundtrip =
        transition_T(psi, phi, connection, via, ctx.samples, ctx.seed);

    const ManifoldModel& n = *phi.target;
    double base_residual = 0.0, fibre_residual = 0.0, cycle_residual = 0.0;
    const int count = std::min(ctx.samples, 48);
    const auto points = phi.source->sample_points(count, ctx.seed);
    for (const auto& x : points) {
        {
            const TangentVector v1 = via.base_coords(x), v2 = direct.base_coords(x);
            base_residual = std::max(base_residual, (n.tangent_to_embedded(v1) -
                                                     n.tangent_to_embedded(v2))
                                                        .cwiseAbs()
                                                        .maxCoeff());
        }
        for (const auto& [key, fn] : via.fibre_coords.locals) {
            if (!via.fibre_coords.in_refined_patch(key.first, key.second, x))
                continue;
            fibre_residual =
                std::max(fibre_residual, (via.fibre_coords.local_matrix(key.first, key.second, x) -
                                          direct.fibre_coords.local_matrix(key.first, key.second, x))
                                             .cwiseAbs()
                                             .maxCoeff());
            cycle_residual =
                std::max(cycle_residual, (roundtrip.fibre_coords.local_matrix(key.first, key.second, x) -
                                          over_psi.fibre_coords.local_matrix(key.first, key.second, x))
                                             .cwiseAbs()
                                             .maxCoeff());
        }
    }
    rec.max_residual = std::max({base_residual, fibre_residual, cycle_residual});
    rec.samples = static_cast<int>(points.size());
    rec.status = rec.max_residual < ctx.tol_ode ? "pass" : "fail";
    rec.detail = "base=" + fmt(base_residual) + " fibre=" + fmt(fibre_residual) +
                 " cycle=" + fmt(cycle_residual);
}

VerticallyCompactRegion region_for(const CheckContext& ctx) {
    VerticallyCompactRegion region;
    region.base = ctx.scenario.region(ctx.str("region"));
    if (ctx.params.contains("radius") && ctx.params["radius"].is_string())
        region.fiber_radius = std::numeric_limits<double>::infinity();
    else
        region.fiber_radius = ctx.params.value("radius", 1.0);
    return region;
}

void run_rigidity(const CheckContext& ctx, CheckRecord& rec) {
    const BundleMorphism& morphism = ctx.scenario.morphism(ctx.str("morphism"));
    const VerticallyCompactRegion region = region_for(ctx);
    const FiberMap phi = as_fiber_map(morphism);

    FiberMap psi = phi;
    const std::string perturb = ctx.params.value("perturb", "none");
    if (perturb == "nonlinear") {
        // compactly supported vertical offset: agrees off the region but is
        // not linear on the fibres
        const double magnitude = ctx.params.value("magnitude", 0.5);
        const double radius = region.fiber_radius;
        const SupportRegion base_region = region.base;
        psi.eval = [inner = phi.eval, base_region, radius, magnitude,
                    rank = morphism.target->rank](const Point& x, const Vec& u) {
            Vec value = inner(x, u);
            if (base_region.inside(x)) {
                const double w = expr::bump(u.squaredNorm(), -radius * radius, radius * radius);
                value += magnitude * w * Vec::Ones(rank);
            }
            return value;
        };
    } else if (perturb != "none") {
        fail(Errc::ParseError, "rigidity: unknown perturb '" + perturb + "'");
    }

    const RigidityVerdict verdict =
        rigidity_check(phi, psi, region, ctx.samples, ctx.seed, ctx.tol_alg);
    const std::string expect = ctx.params.value("expect", "equal");
    bool ok = false;
    if (expect == "equal")
        ok = verdict.equal && verdict.violated_hypothesis.empty();
    else if (expect == "linearity_violation")
        ok = verdict.violated_hypothesis == "fibrewise linearity";
    else
        fail(Errc::ParseError, "rigidity: unknown expectation '" + expect + "'");

    rec.max_residual = expect == "equal" ? verdict.forced_equality_residual
                                         : verdict.off_region_residual;
    rec.samples = verdict.samples;
    rec.status = ok ? "pass" : "fail";
    rec.detail = "forced=" + fmt(verdict.forced_equality_residual) +
                 " scaling=" + fmt(verdict.scaling_identity_residual) +
                 " linearity=" + fmt(verdict.linearity_residual) +
                 (verdict.violated_hypothesis.empty() ? "" : " violated: " + verdict.violated_hypothesis);
}

void run_compact_perturbation(const CheckContext& ctx, CheckRecord& rec) {
    const BundleMorphism& morphism = ctx.scenario.morphism(ctx.str("morphism"));
    const VerticallyCompactRegion region = region_for(ctx);
    std::vector<double> magnitudes;
    if (ctx.params.contains("magnitudes"))
        for (const auto& m : ctx.params["magnitudes"])
            magnitudes.push_back(m.get<double>());
    else
        magnitudes = {1.0};

    const std::string expect = ctx.params.value("expect", "forced_equality");
    double residual = 0.0;
    bool ok = true;
    std::string detail;
    int samples = 0;
    for (const double magnitude : magnitudes) {
        const ConstructionReport report =
            attempt_compact_perturbation(morphism, region, magnitude, ctx.samples, ctx.seed);
        samples = report.samples;
        if (expect == "forced_equality") {
            ok = ok && report.forced_equality && report.scaling_residual < ctx.tol_alg &&
                 !report.no_escape;
            residual = std::max(residual, report.scaling_residual);
        } else if (expect == "no_escape") {
            ok = ok && report.no_escape;
        } else {
            fail(Errc::ParseError, "compact_perturbation: unknown expectation '" + expect + "'");
        }
        detail += "m=" + fmt(magnitude) + ":violation=" + fmt(report.candidate_violation) +
                  ",residual=" + fmt(report.scaling_residual) + " ";
    }
    rec.max_residual = residual;
    rec.samples = samples;
    rec.status = ok ? "pass" : "fail";
    rec.detail = detail;
}

} // namespace

CheckRecord Scenario::run_check(const Check& check) const {
    CheckRecord rec;
    rec.id = check.id;
    rec.kind = check.kind;
    rec.anchor = anchor_for(check.kind);

    CheckContext ctx{*this, check.params, check.params.value("samples", sampling.sample_count),
                     check.params.value("seed", sampling.seed),
                     check.params.value("tol_alg", tolerances.tol_alg),
                     check.params.value("tol_ode", tolerances.tol_ode)};

    const auto start = std::chrono::steady_clock::now();
    try {
        if (check.kind == "cocycle")
            run_cocycle(ctx, rec);
        else if (check.kind == "pullback_cocycle")
            run_pullback_cocycle(ctx, rec);
        else if (check.kind == "pullback_local_form")
            run_pullback_local_form(ctx, rec);
        else if (check.kind == "pullback_naturality")
            run_pullback_naturality(ctx, rec);
        else if (check.kind == "morphism_compatibility")
            run_morphism_compatibility(ctx, rec);
        else if (check.kind == "morphism_linearity")
            run_morphism_linearity(ctx, rec);
        else if (check.kind == "correspondence_roundtrip")
            run_correspondence_roundtrip(ctx, rec);
        else if (check.kind == "correspondence_linearity")
            run_correspondence_linearity(ctx, rec);
        else if (check.kind == "chart_roundtrip")
            run_chart_roundtrip(ctx, rec);
        else if (check.kind == "chart_change_cocycle")
            run_chart_change_cocycle(ctx, rec);
        else if (check.kind == "homotopy_endpoints")
            run_homotopy_endpoints(ctx, rec);
        else if (check.kind == "section_support")
            run_section_support(ctx, rec);
        else if (check.kind == "connection_gauge")
            run_connection_gauge(ctx, rec);
        else if (check.kind == "transport_great_circle")
            run_transport_great_circle(ctx, rec);
        else if (check.kind == "transport_properties")
            run_transport_properties(ctx, rec);
        else if (check.kind == "trivialization_roundtrip")
            run_trivialization_roundtrip(ctx, rec);
        else if (check.kind == "trivialization_linearity")
            run_trivialization_linearity(ctx, rec);
        else if (check.kind == "projection_triangle")
            run_projection_triangle(ctx, rec);
        else if (check.kind == "transition_consistency")
            run_transition_consistency(ctx, rec);
        else if (check.kind == "rigidity")
            run_rigidity(ctx, rec);
        else if (check.kind == "compact_perturbation")
            run_compact_perturbation(ctx, rec);
        else
            fail(Errc::ParseError, "unknown check kind '" + check.kind + "'");
    } catch (const Error& e) {
        rec.status = "error";
        rec.detail = e.what();
    } catch (const std::exception& e) {
        rec.status = "error";
        rec.detail = e.what();
    }
    rec.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

Report Scenario::run(const std::vector<std::string>& kind_filter,
                     const std::string& id_pattern) const {
    Report report;
    for (const auto& check : checks) {
        if (!kind_filter.empty() &&
            std::find(kind_filter.begin(), kind_filter.end(), check.kind) == kind_filter.end())
            continue;
        if (!id_pattern.empty() && check.id.find(id_pattern) == std::string::npos)
            continue;
        report.checks.push_back(run_check(check));
    }
    return report;
}

std::vector<std::string> kinds_for_verb(const std::string& verb) {
    if (verb == "validate")
        return {"cocycle", "connection_gauge", "morphism_compatibility", "section_support"};
    if (verb == "pullback")
        return {"pullback_cocycle", "pullback_local_form", "pullback_naturality"};
    if (verb == "roundtrip")
        return {"correspondence_roundtrip", "correspondence_linearity", "morphism_linearity"};
    if (verb == "chart")
        return {"chart_roundtrip", "chart_change_cocycle", "homotopy_endpoints"};
    if (verb == "transport")
        return {"connection_gauge", "transport_great_circle", "transport_properties"};
    if (verb == "trivialize")
        return {"trivialization_roundtrip", "trivialization_linearity", "projection_triangle",
                "transition_consistency"};
    if (verb == "rigidity")
        return {"rigidity", "compact_perturbation"};
    if (verb == "all")
        return {};
    fail(Errc::ParseError, "unknown verb '" + verb + "'");
}

} // namespace vbm
