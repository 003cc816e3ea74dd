#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "righthand/errors.hpp"
#include "righthand/fields.hpp"
#include "righthand/flow.hpp"
#include "righthand/rng.hpp"

namespace righthand {

// Discrete stand-in for an invariant probability measure: weighted points on
// S^3.  Builders normalize the weights; consumers may assume they sum to 1.
struct MeasureSample {
    std::vector<Vec4> points;
    std::vector<double> weights;
    std::string provenance;
};

namespace detail {

inline void normalize_weights(MeasureSample& mu) {
    double sum = 0.0;
    for (double w : mu.weights) {
        if (!(w >= 0.0)) throw OutOfRangeParameter("measure weights must be nonnegative");
        sum += w;
    }
    if (!(sum > 0.0)) throw OutOfRangeParameter("measure weights must not all vanish");
    for (double& w : mu.weights) w /= sum;
}

inline std::string tagged(const char* tag, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s(%.6g)", tag, value);
    return buf;
}

// Interpolated recurrence times are only accurate to the integrator's step
// scale, which is not enough when a closed-one-form average has to cancel to
// 1e-8 over the sampled loop.  Polish the return time by bisecting the radial
// velocity <phi_t(p) - p, X(phi_t(p))>: it crosses zero transversally at the
// closest return, and each evaluation re-integrates from p, so the root is
// not limited by between-step interpolation.
inline double refine_return_time(const FieldSpec& spec, const Vec4& p, double t_guess) {
    const auto radial = [&](double t) {
        const Vec4 x = integrate(spec, p, t, 1e-12).points.back();
        return (x - p).dot(spec.field(x));
    };
    for (double window : {0.05, 0.2}) {
        double lo = t_guess - window;
        double hi = t_guess + window;
        if (!(lo > 0.0)) continue;
        if (!(radial(lo) < 0.0 && radial(hi) > 0.0)) continue;
        while (hi - lo > 1e-11) {
            const double mid = 0.5 * (lo + hi);
            (radial(mid) < 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    return t_guess;
}

}  // namespace detail

// Uniform-time quadrature of one period of the orbit through p0.  For the
// Hopf and anti-Hopf fields the orbit circle is known in closed form; other
// catalog fields get their period from recurrence detection on a trajectory.
inline MeasureSample periodic_orbit_measure(const FieldSpec& spec, const Vec4& p0, int n_nodes) {
    if (n_nodes < 2) throw OutOfRangeParameter("periodic orbit measure needs at least 2 nodes");
    MeasureSample mu;
    if (spec.kind() == FieldKind::Hopf || spec.kind() == FieldKind::AntiHopf) {
        mu.points = fiber_loop(spec, p0, n_nodes).s3_vertices();
        mu.weights.assign(mu.points.size(), 1.0);
        mu.provenance = detail::tagged("periodic_orbit", 2.0 * pi);
        detail::normalize_weights(mu);
        return mu;
    }
    // The interpolated gap of a genuinely periodic orbit is limited by the
    // step size, around 1e-5 at these tolerances, while quasi-periodic
    // orbits on the catalog fields never recur below ~0.1 by T = 50, so the
    // 1e-3 cutoff separates the two regimes with a wide margin.
    const Trajectory traj = integrate(spec, p0, 50.0, 1e-12);
    const auto events = find_recurrences(traj, 1e-3);
    const RecurrenceEvent* first = nullptr;
    for (const auto& e : events)
        if (e.gap <= 1e-3) {
            first = &e;
            break;
        }
    if (!first)
        throw NoRecurrence("no period found for orbit through seed (gap <= 1e-3 within T=50)");
    const Vec4 start = traj.points.front();
    const double period = detail::refine_return_time(spec, start, first->time);
    // Walk the loop node to node instead of interpolating the stored
    // trajectory: the equal-weight sum over an exact period is spectrally
    // accurate, so node placement is the whole error budget.
    mu.points.reserve(static_cast<std::size_t>(n_nodes));
    mu.points.push_back(start);
    for (int k = 1; k < n_nodes; ++k)
        mu.points.push_back(integrate(spec, mu.points.back(), period / n_nodes, 1e-12).points.back());
    mu.weights.assign(mu.points.size(), 1.0);
    mu.provenance = detail::tagged("periodic_orbit", period);
    detail::normalize_weights(mu);
    return mu;
}

// Trapezoid-rule time average along the finite trajectory of p0 over [0, T].
inline MeasureSample birkhoff_measure(const FieldSpec& spec, const Vec4& p0, double T,
                                      int n_nodes) {
    if (n_nodes < 2) throw OutOfRangeParameter("birkhoff measure needs at least 2 nodes");
    const Trajectory traj = integrate(spec, p0, T, 1e-9);
    MeasureSample mu;
    mu.points.reserve(static_cast<std::size_t>(n_nodes));
    mu.weights.reserve(static_cast<std::size_t>(n_nodes));
    for (int k = 0; k < n_nodes; ++k) {
        mu.points.push_back(trajectory_at(traj, T * k / (n_nodes - 1.0)));
        mu.weights.push_back(k == 0 || k == n_nodes - 1 ? 0.5 : 1.0);
    }
    mu.provenance = detail::tagged("birkhoff", T);
    detail::normalize_weights(mu);
    return mu;
}

// Monte Carlo sample of the field's invariant volume: round-uniform points
// reweighted by the density.  Draws are symmetrized over the eight sign flips
// of (x2, x3, x4); catalog densities depend only on x1, so the reflections
// are measure-preserving, and odd integrands cancel exactly instead of at
// Monte Carlo rate.
inline MeasureSample volume_measure(const FieldSpec& spec, int n_samples, std::uint64_t seed) {
    if (n_samples < 8) throw OutOfRangeParameter("volume measure needs at least 8 samples");
    const int groups = (n_samples + 7) / 8;
    Rng rng(seed);
    MeasureSample mu;
    mu.points.reserve(static_cast<std::size_t>(groups) * 8);
    mu.weights.reserve(static_cast<std::size_t>(groups) * 8);
    for (int g = 0; g < groups; ++g) {
        const Vec4 u = rng.unit4();
        for (int s = 0; s < 8; ++s) {
            const double s2 = (s & 1) ? -1.0 : 1.0;
            const double s3 = (s & 2) ? -1.0 : 1.0;
            const double s4 = (s & 4) ? -1.0 : 1.0;
            const Vec4 p(u[0], s2 * u[1], s3 * u[2], s4 * u[3]);
            mu.points.push_back(p);
            mu.weights.push_back(spec.density(p));
        }
    }
    mu.provenance = detail::tagged("volume", static_cast<double>(groups) * 8);
    detail::normalize_weights(mu);
    return mu;
}

// Lk_omega(mu) by the direct primitive formula: the weighted average of
// nu(X) over the sample.
inline double lk_omega_direct(const FieldSpec& spec, const MeasureSample& mu) {
    double total = 0.0;
    for (std::size_t i = 0; i < mu.points.size(); ++i)
        total += mu.weights[i] * spec.primitive(mu.points[i]).dot(spec.field(mu.points[i]));
    return total;
}

// Same average plus the weighted standard error of the mean, for reports that
// must separate genuine sign from sampling noise.
inline std::pair<double, double> lk_omega_direct_stats(const FieldSpec& spec,
                                                       const MeasureSample& mu) {
    const double mean = lk_omega_direct(spec, mu);
    double var = 0.0;
    for (std::size_t i = 0; i < mu.points.size(); ++i) {
        const double v = spec.primitive(mu.points[i]).dot(spec.field(mu.points[i]));
        var += mu.weights[i] * mu.weights[i] * (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(var)};
}

}  // namespace righthand
