#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "righthand/errors.hpp"
#include "righthand/fields.hpp"
#include "righthand/flow.hpp"
#include "righthand/geometry.hpp"
#include "righthand/linking.hpp"
#include "righthand/measure.hpp"
#include "righthand/rng.hpp"

namespace righthand {

struct AsymptoticLinking {
    LinkingResult link;
    double s_star = 0.0;
    double t_star = 0.0;
};

namespace detail {

// Open S^3 polyline through the trajectory, keeping vertices at least
// min_spacing apart (last vertex always kept).
inline Polyline thin_trajectory(const Trajectory& traj, double min_spacing) {
    std::vector<Vec4> vs;
    vs.push_back(traj.points.front());
    for (std::size_t i = 1; i + 1 < traj.points.size(); ++i)
        if ((traj.points[i] - vs.back()).norm() >= min_spacing) vs.push_back(traj.points[i]);
    if ((traj.points.back() - vs.back()).norm() > 1e-12) vs.push_back(traj.points.back());
    return Polyline::open_s3(std::move(vs));
}

inline double min_sample_distance(const Trajectory& a, const Trajectory& b) {
    // stride so the scan stays near a few thousand samples per curve
    const std::size_t sa = std::max<std::size_t>(1, a.points.size() / 3000);
    const std::size_t sb = std::max<std::size_t>(1, b.points.size() / 3000);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.points.size(); i += sa)
        for (std::size_t j = 0; j < b.points.size(); j += sb)
            best = std::min(best, (a.points[i] - b.points[j]).squaredNorm());
    return std::sqrt(best);
}

}  // namespace detail

// Normalized asymptotic linking estimate: close both trajectories at their
// largest admissible recurrence times S* <= S, T* <= T and divide the loops'
// linking number by S*T*.  The stderr adds the finite-time allowance
// 1/min(S*,T*) (heuristic constant 1) to the quadrature error.
inline AsymptoticLinking asymptotic_linking(const FieldSpec& spec, const Vec4& p, const Vec4& q,
                                            double S, double T, double delta, double jitter,
                                            const std::string& cache_dir = std::string()) {
    if (!(S >= 10.0 && T >= 10.0))
        throw OutOfRangeParameter("asymptotic linking horizons must be >= 10");
    const Trajectory traj_p = cache_dir.empty()
                                  ? integrate(spec, p, S + 1.0, 1e-9)
                                  : integrate_cached(spec, p, S + 1.0, 1e-9, cache_dir);
    const Trajectory traj_q = cache_dir.empty()
                                  ? integrate(spec, q, T + 1.0, 1e-9)
                                  : integrate_cached(spec, q, T + 1.0, 1e-9, cache_dir);

    if (detail::min_sample_distance(traj_p, traj_q) < delta)
        throw OrbitsNotDisjoint("trajectories approach within delta=" + std::to_string(delta));

    const auto pick = [](const std::vector<RecurrenceEvent>& events, double horizon,
                         const char* which) {
        const RecurrenceEvent* best = nullptr;
        for (const auto& e : events)
            if (e.time <= horizon) best = &e;
        if (!best)
            throw NoRecurrence(std::string("no recurrence with requested gap below horizon ") +
                               which);
        return *best;
    };
    const RecurrenceEvent ev_p = pick(find_recurrences(traj_p, delta), S, "S");
    const RecurrenceEvent ev_q = pick(find_recurrences(traj_q, delta), T, "T");

    const Polyline loop_p = close_up(traj_p, ev_p, jitter);
    const Polyline loop_q = close_up(traj_q, ev_q, jitter);

    const LinkingResult lk = linking_integral(loop_p, loop_q);
    const double st = ev_p.time * ev_q.time;
    AsymptoticLinking out;
    out.s_star = ev_p.time;
    out.t_star = ev_q.time;
    out.link.value = lk.value / st;
    out.link.stderr_est = lk.stderr_est / st + 1.0 / std::min(ev_p.time, ev_q.time);
    out.link.method = "asymptotic";
    return out;
}

// Gauss-kernel Monte Carlo estimate of Lk_omega for the Birkhoff measure of
// mu_seed: volume-weighted average over seeds q_j of the open-trajectory
// double kernel integral, normalized by S*T.  Each pair is projected through
// its own shared pole.  Pairs whose quadrature hits the subdivision cap are
// discarded; more than 1% of them is reported as NearSingular.
inline LinkingResult lk_omega_kernel(const FieldSpec& spec, const Vec4& mu_seed, double S,
                                     double T, int n_volume, std::uint64_t seed) {
    if (!(S >= 10.0 && T >= 10.0))
        throw OutOfRangeParameter("kernel estimator horizons must be >= 10");
    if (n_volume < 16) throw OutOfRangeParameter("kernel estimator needs n_volume >= 16");

    const double spacing = 0.1;
    const Trajectory traj_p = integrate(spec, mu_seed, S, 1e-8);
    const Polyline curve_p = detail::thin_trajectory(traj_p, spacing);

    Rng rng(seed);
    std::vector<double> values, weights, quad_errs;
    values.reserve(static_cast<std::size_t>(n_volume));
    int failed = 0;
    for (int j = 0; j < n_volume; ++j) {
        const Vec4 qj = rng.unit4();
        const Trajectory traj_q = integrate(spec, qj, T, 1e-8);
        const Polyline curve_q = detail::thin_trajectory(traj_q, spacing);
        try {
            const LinkingResult part = kernel_integral(curve_p, curve_q);
            values.push_back(part.value / (S * T));
            quad_errs.push_back(part.stderr_est / (S * T));
            weights.push_back(spec.density(qj));
        } catch (const CurvesIntersect&) {
            ++failed;
        } catch (const PoleCollision&) {
            ++failed;
        }
    }
    if (failed > n_volume / 100)
        throw NearSingular(std::to_string(failed) + " of " + std::to_string(n_volume) +
                           " seed trajectories ran into the quadrature depth cap");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (!(wsum > 0.0)) throw NearSingular("all seed trajectories discarded");

    double mean = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) mean += weights[j] * values[j];
    mean /= wsum;
    double var = 0.0, quad2 = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        const double w = weights[j] / wsum;
        var += w * w * (values[j] - mean) * (values[j] - mean);
        quad2 += w * w * quad_errs[j] * quad_errs[j];
    }
    LinkingResult out;
    out.value = mean;
    out.stderr_est = std::sqrt(var + quad2) + 1.0 / std::min(S, T);
    out.method = "kernel_mc";
    return out;
}

}  // namespace righthand
