#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "righthand/errors.hpp"
#include "righthand/fields.hpp"
#include "righthand/geometry.hpp"

namespace righthand {

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec4> points;
    FieldSpec field;
};

struct RecurrenceEvent {
    double time = 0.0;
    double gap = 0.0;
};

namespace detail {

// Dormand-Prince 5(4) tableau, FSAL stage recomputed after renormalization.
struct Dp5 {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // difference between the 5th- and 4th-order weights, including the FSAL stage
    static constexpr double d1 = 71.0 / 57600, d3 = -71.0 / 16695, d4 = 71.0 / 1920,
                            d5 = -17253.0 / 339200, d6 = 22.0 / 525, d7 = -1.0 / 40;
};

}  // namespace detail

// Adaptive Runge-Kutta flow of the field through p0 over [0, T].  The local
// error estimate is controlled per unit time (accept when |err|/h <= tol), so
// the endpoint error scales linearly with tol.  Accepted points are pulled
// back onto S^3, and the step size is capped so consecutive samples stay
// within 0.05 chordal distance.
inline Trajectory integrate(const FieldSpec& spec, const Vec4& p0, double T, double tol) {
    if (!(T > 0.0) || T > 1e5)
        throw OutOfRangeParameter("flow horizon T must lie in (0, 1e5]");
    if (!(tol >= 1e-12 && tol <= 1e-4))
        throw OutOfRangeParameter("integration tol must lie in [1e-12, 1e-4]");

    using D = detail::Dp5;
    const double h_max = 0.049 / spec.speed_bound();

    Trajectory traj{{}, {}, spec};
    Vec4 y = p0.normalized();
    double t = 0.0;
    traj.times.push_back(0.0);
    traj.points.push_back(y);

    const auto f = [&spec](const Vec4& x) { return spec.field(x); };
    Vec4 k1 = f(y);
    double h = std::min(h_max, 1e-2 / spec.speed_bound());

    while (t < T) {
        h = std::min(h, T - t);
        if (h < 1e-12) throw StepUnderflow("step size fell below 1e-12 at t=" + std::to_string(t));

        const Vec4 k2 = f(y + h * (D::a21 * k1));
        const Vec4 k3 = f(y + h * (D::a31 * k1 + D::a32 * k2));
        const Vec4 k4 = f(y + h * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3));
        const Vec4 k5 = f(y + h * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4));
        const Vec4 k6 = f(y + h * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 +
                                   D::a65 * k5));
        const Vec4 y5 = y + h * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
        const Vec4 k7 = f(y5);
        const double err_rate = (D::d1 * k1 + D::d3 * k3 + D::d4 * k4 + D::d5 * k5 + D::d6 * k6 +
                                 D::d7 * k7)
                                    .norm();

        if (err_rate <= tol) {
            t = (T - t - h <= 0.0) ? T : t + h;
            y = y5.normalized();
            traj.times.push_back(t);
            traj.points.push_back(y);
            k1 = f(y);
            const double grow = err_rate > 0.0 ? 0.9 * std::pow(tol / err_rate, 0.2) : 5.0;
            h = std::min(h * std::clamp(grow, 0.2, 5.0), h_max);
        } else {
            h *= std::clamp(0.9 * std::pow(tol / err_rate, 0.2), 0.2, 0.95);
        }
    }
    return traj;
}

// Trajectory point at flow time t, by spherical interpolation between the
// bracketing samples; t is clamped to the trajectory's span.
inline Vec4 trajectory_at(const Trajectory& traj, double t) {
    const auto& ts = traj.times;
    if (t <= ts.front()) return traj.points.front();
    if (t >= ts.back()) return traj.points.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - ts.begin());
    const double t0 = ts[i - 1], t1 = ts[i];
    const double u = (t - t0) / (t1 - t0);
    const Vec4& a = traj.points[i - 1];
    const Vec4& b = traj.points[i];
    const double theta = sphere_angle(a, b);
    if (theta < 1e-9) return ((1.0 - u) * a + u * b).normalized();
    return (std::sin((1.0 - u) * theta) * a + std::sin(u * theta) * b) / std::sin(theta);
}

// Local minima of t -> dist(phi^t(p0), p0) with t > 1 and gap <= delta,
// sharpened by fitting a parabola to the squared distance at the discrete
// minimum and its neighbors.
inline std::vector<RecurrenceEvent> find_recurrences(const Trajectory& traj, double delta) {
    if (!(delta > 0.0 && delta < 2.0))
        throw OutOfRangeParameter("recurrence threshold delta must lie in (0, 2)");
    const Vec4 p0 = traj.points.front();
    const std::size_t n = traj.points.size();
    std::vector<RecurrenceEvent> events;
    if (n < 3) return events;

    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = (traj.points[i] - p0).squaredNorm();

    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(s[i] <= s[i - 1] && s[i] < s[i + 1])) continue;
        const double t0 = traj.times[i - 1], t1 = traj.times[i], t2 = traj.times[i + 1];
        const double s0 = s[i - 1], s1 = s[i], s2 = s[i + 1];
        const double num = (t1 - t0) * (t1 - t0) * (s1 - s2) - (t1 - t2) * (t1 - t2) * (s1 - s0);
        const double den = (t1 - t0) * (s1 - s2) - (t1 - t2) * (s1 - s0);
        double t_star = t1;
        if (std::abs(den) > 1e-300) t_star = std::clamp(t1 - 0.5 * num / den, t0, t2);
        // quadratic through the three samples, evaluated at the vertex
        const double l0 = (t_star - t1) * (t_star - t2) / ((t0 - t1) * (t0 - t2));
        const double l1 = (t_star - t0) * (t_star - t2) / ((t1 - t0) * (t1 - t2));
        const double l2 = (t_star - t0) * (t_star - t1) / ((t2 - t0) * (t2 - t1));
        const double s_star = l0 * s0 + l1 * s1 + l2 * s2;
        const double gap = std::sqrt(std::max(0.0, s_star));
        if (t_star > 1.0 && gap <= delta) events.push_back({t_star, gap});
    }
    return events;
}

namespace detail {

// Minimum distance between the closing arc and the flow segment, ignoring a
// window of flow arclength around each junction.
inline double arc_to_flow_distance(const std::vector<Vec4>& arc, const std::vector<Vec4>& flow,
                                   double window) {
    std::vector<double> s(flow.size(), 0.0);
    for (std::size_t i = 1; i < flow.size(); ++i)
        s[i] = s[i - 1] + (flow[i] - flow[i - 1]).norm();
    const double total = s.back();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < flow.size(); ++i) {
        if (s[i + 1] < window || total - s[i] < window) continue;
        for (std::size_t j = 0; j + 1 < arc.size(); ++j) {
            best = std::min(best, segment_distance_sq(arc[j], arc[j + 1], flow[i], flow[i + 1]));
            if (best == 0.0) return 0.0;
        }
    }
    return std::sqrt(best);
}

inline int close_up_arc_samples(double angle) {
    return std::clamp(static_cast<int>(std::ceil(angle / 0.02)) + 1, 3, 240);
}

}  // namespace detail

// Closed loop from the flow segment up to event.time plus the shortest
// geodesic arc back to the start.  If the arc collides with the flow segment
// at resolution 1e-6, it is bowed out along a normal direction with a sine
// profile, retrying at magnitudes jitter/2^k for k = 0..8.
inline Polyline close_up(const Trajectory& traj, const RecurrenceEvent& event, double jitter) {
    if (!(event.time > 0.0) || event.time > traj.times.back() + 1e-12)
        throw OutOfRangeParameter("recurrence time outside the trajectory span");
    if (!(jitter >= 0.0)) throw OutOfRangeParameter("jitter must be nonnegative");

    std::vector<Vec4> flow;
    for (std::size_t i = 0; i < traj.times.size() && traj.times[i] <= event.time; ++i)
        flow.push_back(traj.points[i]);
    const Vec4 endpoint = trajectory_at(traj, event.time);
    if ((endpoint - flow.back()).norm() > 1e-9) flow.push_back(endpoint);

    const Vec4 start = flow.front();
    const double gap = (flow.back() - start).norm();
    if (gap < 1e-9) {
        flow.pop_back();
        return Polyline::closed_s3(std::move(flow));
    }

    const double angle = sphere_angle(flow.back(), start);
    const Polyline arc0 = geodesic_arc(flow.back(), start, detail::close_up_arc_samples(angle));
    std::vector<Vec4> arc = arc0.s3_vertices();

    // normal direction: orthonormalize a coordinate axis against the arc plane
    const Vec4 u = flow.back();
    const Vec4 v = (start - start.dot(u) * u).normalized();
    Vec4 normal = Vec4::Zero();
    for (int axis = 0; axis < 4; ++axis) {
        Vec4 e = Vec4::Zero();
        e[axis] = 1.0;
        Vec4 w = e - e.dot(u) * u - e.dot(v) * v;
        if (w.norm() > 0.5) {
            normal = w.normalized();
            break;
        }
    }
    if (normal.isZero()) {
        Vec4 e = Vec4::Unit(1);
        normal = (e - e.dot(u) * u - e.dot(v) * v).normalized();
    }

    const double window = gap + 0.15;
    bool embedded = false;
    for (int attempt = 0; attempt <= 9 && !embedded; ++attempt) {
        std::vector<Vec4> trial = arc0.s3_vertices();
        if (attempt > 0) {
            const double mag = jitter / static_cast<double>(1 << (attempt - 1));
            const std::size_t m = trial.size();
            for (std::size_t j = 1; j + 1 < m; ++j) {
                const double bump = mag * std::sin(pi * static_cast<double>(j) / (m - 1));
                trial[j] = (std::cos(bump) * trial[j] + std::sin(bump) * normal).normalized();
            }
        }
        if (detail::arc_to_flow_distance(trial, flow, window) > 1e-6) {
            arc = std::move(trial);
            embedded = true;
        }
    }
    if (!embedded)
        throw EmbeddingFailure("closing arc still meets the flow segment after 8 jitter halvings");

    std::vector<Vec4> loop = std::move(flow);
    for (std::size_t j = 1; j + 1 < arc.size(); ++j) loop.push_back(arc[j]);
    return Polyline::closed_s3(std::move(loop));
}

// ---------------------------------------------------------------------------
// Trajectory cache: plain text, one `time x1 x2 x3 x4` row per sample, keyed
// by a hash of (field, p0, T, tol).

inline std::string trajectory_cache_key(const FieldSpec& spec, const Vec4& p0, double T,
                                        double tol) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g", p0[0], p0[1], p0[2],
                  p0[3], T, tol);
    const std::string text = spec.name() + buf;
    std::uint64_t h = 14695981039346656037ull;  // FNV-1a
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

inline void save_trajectory(const std::string& path, const Trajectory& traj) {
    const std::filesystem::path target(path);
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw DomainError("cannot write trajectory cache '" + path + "'");
        out.precision(17);
        out << "# field: " << traj.field.name() << "\n";
        out << "# samples: " << traj.times.size() << "\n";
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            const Vec4& p = traj.points[i];
            out << traj.times[i] << " " << p[0] << " " << p[1] << " " << p[2] << " " << p[3]
                << "\n";
        }
        if (!out) throw DomainError("write failed for trajectory cache '" + path + "'");
    }
    std::filesystem::rename(tmp, target);
}

// Returns nullopt when the file is absent or unreadable; a stale or corrupt
// cache entry is treated as a miss, never as an error.
inline std::optional<Trajectory> load_trajectory(const std::string& path, const FieldSpec& spec) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    Trajectory traj{{}, {}, spec};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        std::istringstream ss(line);
        double t, x1, x2, x3, x4;
        if (!(ss >> t >> x1 >> x2 >> x3 >> x4)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            return std::nullopt;
        }
        if (!traj.times.empty() && t <= traj.times.back()) return std::nullopt;
        traj.times.push_back(t);
        traj.points.emplace_back(x1, x2, x3, x4);
    }
    if (traj.times.size() < 2 || traj.times.front() != 0.0) return std::nullopt;
    return traj;
}

inline Trajectory integrate_cached(const FieldSpec& spec, const Vec4& p0, double T, double tol,
                                   const std::string& cache_dir) {
    if (cache_dir.empty()) return integrate(spec, p0, T, tol);
    std::filesystem::create_directories(cache_dir);
    const std::string path =
        (std::filesystem::path(cache_dir) / (trajectory_cache_key(spec, p0, T, tol) + ".traj"))
            .string();
    if (auto cached = load_trajectory(path, spec)) {
        if (std::abs(cached->times.back() - T) < 1e-9 &&
            (cached->points.front() - p0.normalized()).norm() < 1e-9)
            return *cached;
    }
    Trajectory traj = integrate(spec, p0, T, tol);
    save_trajectory(path, traj);
    return traj;
}

}  // namespace righthand
