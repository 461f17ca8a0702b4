#pragma once

// Deterministic random stream.  All variate transforms are implemented here
// on top of the raw 64-bit generator so that sequences are bit-reproducible
// across standard-library implementations; std::mt19937_64 supplies only the
// engine, whose output is fixed by the C++ standard.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace spacoclust {

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform draw on the open interval (0, 1); never returns 0 or 1.
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
    }

    /// Uniform integer in {0, ..., n - 1} by rejection; unbiased.
    int uniform_int(int n) {
        if (n <= 0) throw std::domain_error("uniform_int: n must be positive");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return static_cast<int>(v % un);
    }

    /// Standard normal via Box-Muller; the paired draw is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.28318530717958647692528676655900577;
        spare_ = radius * std::sin(two_pi * u2);
        have_spare_ = true;
        return radius * std::cos(two_pi * u2);
    }

    /// Gamma(shape, scale 1) by Marsaglia-Tsang squeeze; shape < 1 is boosted
    /// through the Gamma(shape + 1) identity.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw std::domain_error("gamma: shape must be positive");
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

    /// First m entries of a partial Fisher-Yates shuffle of {0, ..., n - 1}.
    std::vector<int> sample_without_replacement(int n, int m) {
        if (m < 0 || m > n) {
            throw std::domain_error("sample_without_replacement: require 0 <= m <= n");
        }
        std::vector<int> pool(static_cast<std::size_t>(n));
        std::iota(pool.begin(), pool.end(), 0);
        std::vector<int> out(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
            const int pick = j + uniform_int(n - j);
            std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
            out[static_cast<std::size_t>(j)] = pool[static_cast<std::size_t>(j)];
        }
        return out;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace spacoclust
