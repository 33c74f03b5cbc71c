#pragma once

#include "vbm/errors.hpp"
#include "vbm/sampling.hpp"

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace vbm {

using Point = Eigen::VectorXd; // embedded coordinates in R^k
using Mat = Eigen::MatrixXd;

// One coordinate patch of an embedded manifold. to_embedded must be a smooth
// formula valid on (a neighbourhood of) the domain; domain_test gates
// membership of embedded points. sample_lo/hi is a box in local coordinates
// that lies inside the domain and backs low-discrepancy sampling.
struct Chart {
    int id = 0;
    std::function<bool(const Point&)> domain_test;
    std::function<Vec(const Point&)> to_local;
    std::function<Point(const Vec&)> to_embedded;
    // optional analytic differential of to_embedded (k x dim); finite
    // differences are used when absent
    std::function<Mat(const Vec&)> embed_jacobian;
    Vec sample_lo, sample_hi;
};

// Tangent vector at `base`, with components expressed in the chart
// `chart_id` (components has manifold dimension, not embedding dimension).
struct TangentVector {
    Point base;
    Vec components;
    int chart_id = 0;
};

struct GeodesicPath {
    std::vector<Point> points;
    std::vector<TangentVector> velocities; // chart components along the path
};

// Finite-dimensional manifold embedded in R^k with a finite chart atlas and
// a Riemannian metric given per chart. Catalog entries carry closed-form
// exp/log/distance; everything else falls back to RK4 geodesics and a damped
// Newton shooting method. All state is immutable after construction.
class ManifoldModel {
public:
    std::string name;
    int dim = 0;
    int embed_dim = 0;
    std::vector<Chart> charts;
    // metric matrix in chart coordinates, symmetric positive definite
    std::function<Mat(int chart_id, const Vec& local)> metric;
    double injectivity_bound = 0.0; // r_inj; may be +inf

    // closed forms, empty for generic manifolds; tangents in embedded coords
    std::function<Point(const Point& p, const Vec& w_embedded)> exp_closed;
    std::function<Vec(const Point& p, const Point& q)> log_closed;
    std::function<double(const Point& p, const Point& q)> distance_closed;
    // optional closed-form Christoffel symbols: gamma[k](i,j)
    std::function<std::vector<Mat>(int chart_id, const Vec& local)> christoffel_closed;

    int ode_steps = 128;

    // chart bookkeeping
    const Chart& chart(int id) const;
    bool in_chart(int id, const Point& p) const;
    int canonical_chart(const Point& p) const; // lowest id containing p

    // tangent representation changes
    Mat embed_jacobian_at(int chart_id, const Vec& local) const;
    Mat chart_transition_jacobian(int from_chart, int to_chart, const Vec& local_from) const;
    Vec tangent_to_embedded(const TangentVector& v) const;
    TangentVector tangent_from_embedded(const Point& p, const Vec& w_embedded, int chart_id = -1) const;
    TangentVector tangent_to_chart(const TangentVector& v, int chart_id) const;

    double metric_norm(const TangentVector& v) const;

    // Riemannian operations
    Point exp(const TangentVector& v) const;
    TangentVector log(const Point& p, const Point& q) const;
    double distance(const Point& p, const Point& q) const;
    bool in_injectivity_domain(const Point& p, const Point& q) const;

    // numerical routes, exposed so closed forms can be cross-checked
    std::vector<Mat> christoffel(int chart_id, const Vec& local) const;
    std::vector<Mat> christoffel_fd(int chart_id, const Vec& local) const;
    GeodesicPath geodesic_path(const TangentVector& v, int steps) const;
    std::vector<Point> geodesic_integrate(const TangentVector& v, int steps) const;
    Point exp_ode(const TangentVector& v, int steps = 0) const;
    TangentVector log_shooting(const Point& p, const Point& q, int max_iterations = 50) const;
    double path_length(const GeodesicPath& path) const;

    // low-discrepancy points spread over the atlas
    std::vector<Point> sample_points(int count, std::uint64_t seed) const;
};

// catalog: euclidean(n), circle, sphere2, torus2
ManifoldModel make_euclidean(int n);
ManifoldModel make_circle();
ManifoldModel make_sphere2();
ManifoldModel make_torus2();

// resolves catalog names as they appear in scenario files, e.g. "euclidean(3)"
ManifoldModel make_manifold_by_name(const std::string& name);

double wrap_angle(double a); // to (-pi, pi]

} // namespace vbm
