#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "contrakt/mat.hpp"

namespace contrakt {

/// Seeded 64-bit generator (xorshift* core) with hand-rolled distributions,
/// so that runs are bit-reproducible independent of the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {
        for (int i = 0; i < 8; ++i) next(); // decorrelate nearby seeds
    }

    std::uint64_t next() {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    /// Uniform point in the closed ball of given radius around a center.
    Vec ball(const Vec& center, double radius) {
        const std::size_t n = center.size();
        Vec d(n);
        double nn = 0.0;
        do {
            nn = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                d[i] = normal();
                nn += d[i] * d[i];
            }
        } while (nn <= 1e-300);
        const double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(n));
        const double s = r / std::sqrt(nn);
        Vec out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = center[i] + s * d[i];
        return out;
    }

    /// Uniform point inside a box.
    Vec in_box(const Box& box) {
        Vec x(box.dim());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = uniform(box.lo[i], box.hi[i]);
        return x;
    }

private:
    std::uint64_t state_;
};

} // namespace contrakt
