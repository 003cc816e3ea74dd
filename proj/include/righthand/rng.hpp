#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace righthand {

// All stochastic routines take an explicit seed and draw from this engine so
// that results are reproducible across runs and platforms.  mt19937_64 plus
// the manual [0,1) reduction below is bit-stable everywhere we care about;
// std::uniform_real_distribution is not guaranteed to be.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() {
        // 53 random bits -> double in [0,1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t bits() { return engine_(); }

    double normal() {
        // Marsaglia polar method, no cached spare (cheap enough here).
        for (;;) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0)
                return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    // Uniform on the unit sphere of R^4.
    Eigen::Vector4d unit4() {
        Eigen::Vector4d g;
        for (;;) {
            for (int i = 0; i < 4; ++i) g[i] = normal();
            const double n = g.norm();
            if (n > 1e-12) return g / n;
        }
    }

    Eigen::Vector3d unit3() {
        Eigen::Vector3d g;
        for (;;) {
            for (int i = 0; i < 3; ++i) g[i] = normal();
            const double n = g.norm();
            if (n > 1e-12) return g / n;
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace righthand
