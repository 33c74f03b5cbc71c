#pragma once

#include "vbm/pullback.hpp"

#include <memory>

namespace vbm {

// A linear bundle morphism E -> F over a base map phi, stored as the family
// of local matrices A_lambda^alpha on the refined cover
// U_lambda^alpha = U_lambda intersect phi^{-1}(V_alpha). The family must
// satisfy the overlap compatibility law
//   A_mu^beta(x) = theta_F(alpha,beta)(phi x) A_lambda^alpha(x) T_E(mu,lambda)(x)
// which check_overlap_compatibility probes by sampling.
struct BundleMorphism {
    const VectorBundle* source = nullptr; // E over M
    const VectorBundle* target = nullptr; // F over N
    SmoothMap base_map;                   // phi
    std::map<std::pair<int, int>, MatrixFn> locals;

    bool in_refined_patch(int lambda, int alpha, const Point& x) const;
    // resolves missing entries through the compatibility law
    Mat local_matrix(int lambda, int alpha, const Point& x) const;
};

// A morphism E -> phi!F over the identity of M; equivalently a section of
// the bundle L(E, phi!F). Same local data as a BundleMorphism over phi.
struct MorphismOverIdentity {
    const VectorBundle* source = nullptr;            // E
    std::shared_ptr<const PullbackBundle> target;    // phi!F
    std::map<std::pair<int, int>, MatrixFn> locals;

    bool in_refined_patch(int lambda, int alpha, const Point& x) const;
    Mat local_matrix(int lambda, int alpha, const Point& x) const;
};

// synthesized cover patch for U_lambda^alpha; used for sampling
CoverPatch refined_patch(const VectorBundle& e_bundle, int lambda,
                         std::function<bool(const Point&)> target_membership,
                         const std::function<Point(const Point&)>& base_map);

BundleElement evaluate(const BundleMorphism& morphism, const BundleElement& element);
BundleElement evaluate_identity(const MorphismOverIdentity& morphism, const BundleElement& element);

ValidationReport check_overlap_compatibility(const BundleMorphism& morphism, int sample_count,
                                             std::uint64_t seed, double tol_alg = 1e-9);

// the correspondence between morphisms over phi and morphisms over Id_M:
// locals coincide, only the housing changes
MorphismOverIdentity morph_to_identity(const BundleMorphism& morphism);
BundleMorphism identity_to_morph(const MorphismOverIdentity& morphism);

// vector space structure on the fibre over a fixed base map
BundleMorphism morphism_add(const BundleMorphism& a, const BundleMorphism& b);
BundleMorphism morphism_scale(double factor, const BundleMorphism& morphism);

// sup over sampled points and patch pairs of local matrix differences
double morphism_distance(const BundleMorphism& a, const BundleMorphism& b, int sample_count,
                         std::uint64_t seed);

// constructions
BundleMorphism zero_morphism(const VectorBundle& e_bundle, const VectorBundle& f_bundle,
                             const SmoothMap& phi);
// the tangent map of phi between catalog tangent bundles
BundleMorphism differential_morphism(const VectorBundle& tm, const VectorBundle& tn,
                                     const SmoothMap& phi);
// the canonical morphism phi! viewed as an element of Morph(phi!F, F)
BundleMorphism phi_shriek_morphism(const PullbackBundle& pb);
// smooth randomized morphism: a sum of bump-localized constant seeds spread
// across the refined cover
BundleMorphism random_morphism(const VectorBundle& e_bundle, const VectorBundle& f_bundle,
                               const SmoothMap& phi, std::uint64_t seed, int seed_count = 3);

} // namespace vbm
