#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace vbm {

using Vec = Eigen::VectorXd;

// Radical-inverse Halton point in [0,1)^dim. The seed offsets the index so
// that different seeds visit different (but equally well spread) points.
double halton_radical_inverse(std::uint64_t index, std::uint64_t base);
Vec halton_point(std::uint64_t index, int dim);

// Low-discrepancy stream over an axis-aligned box. Deterministic for a fixed
// (seed, draw order); draws from distinct streams do not interleave.
class BoxSampler {
public:
    BoxSampler(Vec lo, Vec hi, std::uint64_t seed);

    Vec next();

private:
    Vec lo_, hi_;
    std::uint64_t index_;
};

// SplitMix64: tiny deterministic generator for randomized fixtures. Kept
// self-contained so reports do not depend on the standard library's
// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64();
    // uniform in [0,1)
    double next_double();
    // uniform in [lo, hi)
    double uniform(double lo, double hi);

    Eigen::MatrixXd matrix(int rows, int cols, double lo, double hi);
    Vec vector(int n, double lo, double hi);

private:
    std::uint64_t state_;
};

} // namespace vbm
