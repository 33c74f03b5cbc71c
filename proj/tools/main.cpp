#include "vbm/scenario.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

namespace {

// environment overrides mirror the flags
template <typename T>
void env_override(const char* name, T& value) {
    if (const char* text = std::getenv(name)) {
        std::istringstream in(text);
        T parsed;
        if (in >> parsed)
            value = parsed;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale checks for vector bundle morphism spaces"};
    app.require_subcommand(0, 0);

    std::string verb, path, filter, format = "text";
    std::string adhoc_bundle, adhoc_map;
    int samples = -1;
    long long seed = -1;
    double tol_alg = -1.0, tol_ode = -1.0;

    app.add_option("verb", verb,
                   "validate | pullback | roundtrip | chart | transport | trivialize | rigidity | all")
        ->required();
    app.add_option("scenario", path, "scenario file (JSON)")->required();
    app.add_option("--filter", filter, "only run checks whose id contains this substring");
    app.add_option("--samples", samples, "override the scenario sample count");
    app.add_option("--seed", seed, "override the scenario seed");
    app.add_option("--tol-alg", tol_alg, "override the algebraic tolerance");
    app.add_option("--tol-ode", tol_ode, "override the ODE tolerance");
    app.add_option("--format", format, "text | json")->check(CLI::IsMember({"text", "json"}));
    app.add_option("--bundle", adhoc_bundle, "pullback verb: bundle to pull back");
    app.add_option("--map", adhoc_map, "pullback verb: map to pull back along");

    CLI11_PARSE(app, argc, argv);

    env_override("VBMORPH_SAMPLES", samples);
    env_override("VBMORPH_SEED", seed);
    env_override("VBMORPH_TOL_ALG", tol_alg);
    env_override("VBMORPH_TOL_ODE", tol_ode);

    try {
        vbm::Scenario scenario = vbm::Scenario::load(path);
        if (samples > 0)
            scenario.sampling.sample_count = samples;
        if (seed >= 0)
            scenario.sampling.seed = static_cast<std::uint64_t>(seed);
        if (tol_alg > 0)
            scenario.tolerances.tol_alg = tol_alg;
        if (tol_ode > 0)
            scenario.tolerances.tol_ode = tol_ode;

        vbm::Report report;
        if (verb == "pullback" && !adhoc_bundle.empty() && !adhoc_map.empty()) {
            vbm::Scenario::Check check;
            check.id = "pullback-" + adhoc_bundle + "-" + adhoc_map;
            check.kind = "pullback_cocycle";
            check.params = {{"bundle", adhoc_bundle}, {"map", adhoc_map}};
            report.checks.push_back(scenario.run_check(check));
        } else {
            report = scenario.run(vbm::kinds_for_verb(verb), filter);
        }

        std::cout << (format == "json" ? vbm::emit_structured(report) : vbm::emit_text(report));
        return report.all_pass() ? 0 : 1;
    } catch (const vbm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
