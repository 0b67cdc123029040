#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace zvis {

// Counter-based noise: every Gaussian increment is a pure function of
// (seed, stream, counter), so batches are reproducible under any thread
// count and any evaluation order.

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Sub-seed for item `index` of a family rooted at `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x6A09E667F3BCC909ull));
}

/// Two independent N(0,1) draws for counter `ctr` under `key` (Box-Muller).
inline void normal_pair(std::uint64_t key, std::uint64_t ctr, double& z0, double& z1) {
    const std::uint64_t a = splitmix64(key + ctr * 0xD1342543DE82EF95ull);
    const std::uint64_t b = splitmix64(a ^ 0x632BE59BD9B4E019ull);
    // u1 in (0,1], u2 in [0,1)
    const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    z0 = radius * std::cos(angle);
    z1 = radius * std::sin(angle);
}

/// Stateless stream of standard normals identified by (seed, stream).
struct GaussianStream {
    std::uint64_t key;

    GaussianStream(std::uint64_t seed, std::uint64_t stream)
        : key(splitmix64(seed ^ splitmix64(stream + 0xBB67AE8584CAA73Bull))) {}

    /// Fill `out` with the normals of block `block` (one block per SDE step).
    void fill(std::uint64_t block, Eigen::Ref<Eigen::VectorXd> out) const {
        const auto n = static_cast<std::uint64_t>(out.size());
        const std::uint64_t pairs = (n + 1) / 2;
        for (std::uint64_t p = 0; p < pairs; ++p) {
            double z0, z1;
            normal_pair(key, block * pairs + p, z0, z1);
            out[static_cast<Eigen::Index>(2 * p)] = z0;
            if (2 * p + 1 < n) out[static_cast<Eigen::Index>(2 * p + 1)] = z1;
        }
    }

    double scalar(std::uint64_t index) const {
        double z0, z1;
        normal_pair(key, index, z0, z1);
        return z0;
    }
};

} // namespace zvis
