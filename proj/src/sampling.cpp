#include "vbm/sampling.hpp"

#include <array>

namespace vbm {

namespace {
constexpr std::array<std::uint64_t, 8> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19};
} // namespace

double halton_radical_inverse(std::uint64_t index, std::uint64_t base) {
    double result = 0.0;
    double f = 1.0;
    while (index > 0) {
        f /= static_cast<double>(base);
        result += f * static_cast<double>(index % base);
        index /= base;
    }
    return result;
}

Vec halton_point(std::uint64_t index, int dim) {
    Vec p(dim);
    for (int d = 0; d < dim; ++d)
        p[d] = halton_radical_inverse(index, kPrimes[static_cast<std::size_t>(d) % kPrimes.size()]);
    return p;
}

BoxSampler::BoxSampler(Vec lo, Vec hi, std::uint64_t seed)
    : lo_(std::move(lo)), hi_(std::move(hi)), index_(1 + 7919 * seed) {}

Vec BoxSampler::next() {
    const Vec u = halton_point(index_++, static_cast<int>(lo_.size()));
    return lo_ + u.cwiseProduct(hi_ - lo_);
}

std::uint64_t Rng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

Eigen::MatrixXd Rng::matrix(int rows, int cols, double lo, double hi) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            m(i, j) = uniform(lo, hi);
    return m;
}

Vec Rng::vector(int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i)
        v[i] = uniform(lo, hi);
    return v;
}

} // namespace vbm
