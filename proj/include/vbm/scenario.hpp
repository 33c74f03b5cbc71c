#pragma once

#include "vbm/morph_bundle.hpp"

#include <json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace vbm {

using Json = nlohmann::ordered_json;

struct Tolerances {
    double tol_alg = 1e-9;
    double tol_ode = 1e-6;
};

struct SamplingConfig {
    int sample_count = 256;
    std::uint64_t seed = 0;
};

struct CheckRecord {
    std::string id;
    std::string kind;
    std::string anchor; // names the identity being verified
    std::string status; // pass | fail | error
    std::string detail;
    double max_residual = 0.0;
    int samples = 0;
    double elapsed_ms = 0.0; // text output only; never serialized

    bool passed() const { return status == "pass"; }
};

struct Report {
    std::vector<CheckRecord> checks;

    bool all_pass() const;
};

std::string emit_text(const Report& report);
// deterministic: identical configuration and seed give identical bytes
std::string emit_structured(const Report& report);

// A scenario file: named declarations plus the list of checks to run.
// Everything is resolved and compiled at load time; run() only executes.
class Scenario {
public:
    static Scenario load(const std::string& path);
    static Scenario from_json(const Json& doc);

    SamplingConfig sampling;
    Tolerances tolerances;

    struct Check {
        std::string id;
        std::string kind;
        Json params;
    };
    std::vector<Check> checks;

    // kind_filter empty = every kind; id_pattern empty = every id
    Report run(const std::vector<std::string>& kind_filter = {},
               const std::string& id_pattern = {}) const;
    CheckRecord run_check(const Check& check) const;

    // registries (declaration name -> object); owned by the scenario
    const ManifoldModel& manifold(const std::string& name) const;
    const VectorBundle& bundle(const std::string& name) const;
    const SmoothMap& map(const std::string& name) const;
    const BundleMorphism& morphism(const std::string& name) const;
    const Connection& connection(const std::string& name) const;
    const SupportRegion& region(const std::string& name) const;
    const TangentSection& section(const std::string& name) const;

    std::vector<std::string> check_ids() const;

private:
    std::map<std::string, std::unique_ptr<ManifoldModel>> manifolds_;
    std::map<std::string, std::unique_ptr<VectorBundle>> bundles_;
    std::map<std::string, SmoothMap> maps_;
    std::map<std::string, std::unique_ptr<BundleMorphism>> morphisms_;
    std::map<std::string, std::unique_ptr<Connection>> connections_;
    std::map<std::string, SupportRegion> regions_;
    std::map<std::string, TangentSection> sections_;
    // pullback bundles synthesized for phi_shriek morphisms stay alive here
    std::vector<std::shared_ptr<PullbackBundle>> owned_pullbacks_;

    void load_manifolds(const Json& doc);
    void load_maps(const Json& doc);
    void load_bundles(const Json& doc);
    void load_morphisms(const Json& doc);
    void load_connections(const Json& doc);
    void load_regions(const Json& doc);
    void load_sections(const Json& doc);
    void load_suites(const Json& doc);
};

// check kinds grouped by CLI verb; "all" maps to an empty filter
std::vector<std::string> kinds_for_verb(const std::string& verb);

} // namespace vbm
