#pragma once

#include <cmath>
#include <span>

namespace zvis {

struct SampleStats {
    long n = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased when n > 1

    double std_error() const { return n > 1 ? std::sqrt(variance / static_cast<double>(n)) : 0.0; }
};

inline SampleStats sample_stats(std::span<const double> xs) {
    SampleStats s;
    s.n = static_cast<long>(xs.size());
    if (s.n == 0) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs) {
            const double d = x - s.mean;
            ss += d * d;
        }
        s.variance = ss / static_cast<double>(s.n - 1);
    }
    return s;
}

} // namespace zvis
