#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "righthand/errors.hpp"
#include "righthand/fields.hpp"
#include "righthand/flow.hpp"
#include "righthand/geometry.hpp"
#include "righthand/rng.hpp"

namespace righthand {

// Ulam discretization of the time-tau flow map on a Hopf-coordinate grid
//     x = (cos eta cos xi1, cos eta sin xi1, sin eta cos xi2, sin eta sin xi2)
// with eta in [0, pi/2] and xi1, xi2 in [0, 2pi).  Cells are axis-aligned
// boxes, uniform in each coordinate; the volume of a box is
// (sin^2 eta_hi - sin^2 eta_lo) / (n_xi1 n_xi2) of the total.
struct UlamChain {
    int n_eta = 0, n_xi1 = 0, n_xi2 = 0;
    double tau = 0.0;
    std::string field_name;
    std::vector<double> transition;   // dense row-major, cells() x cells()
    std::vector<double> objective;    // per-cell mean of nu(X)
    std::vector<double> cell_volume;  // normalized volumes, sum 1

    int cells() const { return n_eta * n_xi1 * n_xi2; }
};

namespace detail {

inline int ulam_cell_of(const UlamChain& chain, const Vec4& p) {
    const double r2 = std::min(1.0, p[2] * p[2] + p[3] * p[3]);  // sin^2 eta
    const double eta = std::asin(std::sqrt(r2));
    double xi1 = std::atan2(p[1], p[0]);
    double xi2 = std::atan2(p[3], p[2]);
    if (xi1 < 0.0) xi1 += 2.0 * pi;
    if (xi2 < 0.0) xi2 += 2.0 * pi;
    const auto bin = [](double x, double width, int n) {
        return std::clamp(static_cast<int>(x / width), 0, n - 1);
    };
    const int ie = bin(eta, 0.5 * pi / chain.n_eta, chain.n_eta);
    const int j1 = bin(xi1, 2.0 * pi / chain.n_xi1, chain.n_xi1);
    const int j2 = bin(xi2, 2.0 * pi / chain.n_xi2, chain.n_xi2);
    return (ie * chain.n_xi1 + j1) * chain.n_xi2 + j2;
}

}  // namespace detail

// Builds the transition matrix by flowing samples_per_cell starting points
// per cell for time tau.  The within-cell sample pattern (offsets in the
// volume-uniform cell coordinates) is drawn once and reused for every cell,
// so cells related by a grid rotation in xi1 or xi2 see congruent samples
// and the chain inherits the flow's rotation symmetries up to binning.
inline UlamChain build_chain(const FieldSpec& spec, std::array<int, 3> resolution, double tau,
                             int samples_per_cell, std::uint64_t seed) {
    const auto [n_eta, n_xi1, n_xi2] = resolution;
    if (n_eta < 1 || n_xi1 < 1 || n_xi2 < 1)
        throw OutOfRangeParameter("chain resolution components must be positive");
    const long long total = 1ll * n_eta * n_xi1 * n_xi2;
    if (total > 100000)
        throw ResolutionTooLarge(std::to_string(total) + " cells exceed the 1e5 limit");
    if (!(tau >= 0.01 && tau <= 1.0))
        throw OutOfRangeParameter("tau must lie in [0.01, 1]");
    if (samples_per_cell < 8) throw OutOfRangeParameter("need samples_per_cell >= 8");

    UlamChain chain;
    chain.n_eta = n_eta;
    chain.n_xi1 = n_xi1;
    chain.n_xi2 = n_xi2;
    chain.tau = tau;
    chain.field_name = spec.name();
    const int n = chain.cells();
    chain.transition.assign(static_cast<std::size_t>(n) * n, 0.0);
    chain.objective.assign(n, 0.0);
    chain.cell_volume.assign(n, 0.0);

    Rng rng(seed);
    std::vector<std::array<double, 3>> offsets(static_cast<std::size_t>(samples_per_cell));
    for (auto& o : offsets) o = {rng.uniform(), rng.uniform(), rng.uniform()};

    const double d_eta = 0.5 * pi / n_eta;
    const double d_xi1 = 2.0 * pi / n_xi1;
    const double d_xi2 = 2.0 * pi / n_xi2;

    for (int ie = 0; ie < n_eta; ++ie) {
        const double s2_lo = std::sin(ie * d_eta) * std::sin(ie * d_eta);
        const double s2_hi = std::sin((ie + 1) * d_eta) * std::sin((ie + 1) * d_eta);
        for (int j1 = 0; j1 < n_xi1; ++j1) {
            for (int j2 = 0; j2 < n_xi2; ++j2) {
                const int row = (ie * n_xi1 + j1) * n_xi2 + j2;
                chain.cell_volume[row] = (s2_hi - s2_lo) / (n_xi1 * n_xi2);
                for (const auto& o : offsets) {
                    const double u = s2_lo + o[0] * (s2_hi - s2_lo);
                    const double eta = std::asin(std::sqrt(u));
                    const double xi1 = (j1 + o[1]) * d_xi1;
                    const double xi2 = (j2 + o[2]) * d_xi2;
                    const Vec4 p(std::cos(eta) * std::cos(xi1), std::cos(eta) * std::sin(xi1),
                                 std::sin(eta) * std::cos(xi2), std::sin(eta) * std::sin(xi2));
                    chain.objective[row] += spec.primitive(p).dot(spec.field(p));
                    const Trajectory hop = integrate(spec, p, tau, 1e-8);
                    const int dest = detail::ulam_cell_of(chain, hop.points.back());
                    chain.transition[static_cast<std::size_t>(row) * n + dest] += 1.0;
                }
                chain.objective[row] /= samples_per_cell;
                for (int k = 0; k < n; ++k)
                    chain.transition[static_cast<std::size_t>(row) * n + k] /= samples_per_cell;
            }
        }
    }
    return chain;
}

}  // namespace righthand
