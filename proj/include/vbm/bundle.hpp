#pragma once

#include "vbm/geometry.hpp"

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace vbm {

// Matrix-valued function of a base point (embedded coordinates).
using MatrixFn = std::function<Mat(const Point&)>;

// Sampling window for a patch: a box in the coordinates of one chart of the
// base manifold. Patches may carry several windows when no single chart
// covers them (pullback patches inherit every base chart).
struct SampleRegion {
    int chart_id = 0;
    Vec lo, hi;
};

struct CoverPatch {
    int id = 0;
    const ManifoldModel* base = nullptr;
    std::function<bool(const Point&)> membership;
    std::vector<SampleRegion> regions;
    // preimage patches of pullbacks may legitimately be empty
    bool expect_nonempty = true;

    bool contains(const Point& p) const { return membership(p); }
};

// Transition data theta_{ab}: fiber coordinates in patch a map to patch b by
// v_b = theta(a, b, y) v_a. Missing reverse entries resolve by inversion;
// same-patch queries resolve to the identity unless an explicit entry exists
// (broken fixtures may plant one).
class TransitionCocycle {
public:
    std::vector<CoverPatch> patches;

    struct Entry {
        MatrixFn fn;
        bool expect_nonempty = true; // EmptyOverlapSampling applies only to these
    };
    std::map<std::pair<int, int>, Entry> entries;

    void add(int from, int to, MatrixFn fn, bool expect_nonempty = true);
    bool has_entry(int from, int to) const;
    bool connected(int from, int to) const; // entry in either direction, or from == to
    Mat theta(int from, int to, const Point& y, int rank) const;

    const CoverPatch& patch(int id) const;
};

struct VectorBundle {
    std::string name;
    const ManifoldModel* base = nullptr;
    int rank = 0;
    TransitionCocycle cocycle;

    const CoverPatch& patch(int id) const { return cocycle.patch(id); }
    // fibrewise changes all lie in GL(rank)
    Mat theta(int from, int to, const Point& y) const { return cocycle.theta(from, to, y, rank); }
    int canonical_patch(const Point& p) const; // lowest patch id containing p
};

// One point of the total space, presented through a patch trivialization.
struct BundleElement {
    int patch_id = 0;
    Point base_point;
    Vec fiber;
};

struct ValidationReport {
    bool pass = true;
    double max_residual = 0.0;
    int samples = 0;
    std::vector<std::pair<std::string, double>> components;
    std::string note;

    void record(const std::string& label, double residual, double tolerance);
};

// Halton points inside the common membership region of the given patches.
// Throws EmptyOverlapSampling only if `required` and nothing is found.
std::vector<Point> sample_overlap(const std::vector<const CoverPatch*>& patches, int count,
                                  std::uint64_t seed, bool required);

// CC1 over sampled triple overlaps, CC2 and the condition-number guard over
// sampled patches/pairs.
ValidationReport validate_cocycle(const VectorBundle& bundle, int sample_count, std::uint64_t seed,
                                  double tol_alg = 1e-9);

BundleElement change_chart(const VectorBundle& bundle, const BundleElement& element, int target_patch);
std::pair<Point, Vec> trivialize(const VectorBundle& bundle, int patch, const BundleElement& element);

// catalog bundles
VectorBundle make_trivial_bundle(const ManifoldModel& base, int rank);
VectorBundle make_mobius_bundle(const ManifoldModel& circle);
VectorBundle make_tangent_sphere_bundle(const ManifoldModel& sphere);

// tangent bundle of any catalog manifold: trivial with identity transitions
// for the flat entries (circle, torus, euclidean), the stereographic pair for
// the sphere
VectorBundle make_tangent_bundle(const ManifoldModel& m);

inline constexpr double kConditionGuard = 1e8;

} // namespace vbm
