#include "test_support.hpp"

#include <fstream>
#include <set>

#include "righthand/flow.hpp"
#include "righthand/linking.hpp"

using namespace righthand;

namespace {

// Closed-form Hopf flow: simultaneous rotation in the (x1,x2) and (x3,x4) planes.
Vec4 hopf_exact(const Vec4& p0, double t) {
    const double c = std::cos(t), s = std::sin(t);
    return Vec4(c * p0[0] - s * p0[1], s * p0[0] + c * p0[1], c * p0[2] - s * p0[3],
                s * p0[2] + c * p0[3]);
}

// Exact Hopf circle sampled at m+1 uniform times over [0, span], packaged as a
// trajectory so close_up can be exercised without the integrator.
Trajectory circle_trajectory(double span, int m, bool include_last) {
    Trajectory tr{{}, {}, FieldSpec::hopf()};
    const int n = include_last ? m + 1 : m;
    for (int k = 0; k < n; ++k) {
        const double t = include_last ? span * k / m : span * k / (m - 1);
        tr.times.push_back(t);
        tr.points.emplace_back(std::cos(t), std::sin(t), 0.0, 0.0);
    }
    return tr;
}

const Vec4 generic_p0 = Vec4(0.5, -0.1, 0.7, 0.2).normalized();

}  // namespace

TEST_CASE("integrate validates its arguments", "[flow]") {
    const FieldSpec h = FieldSpec::hopf();
    REQUIRE_THROWS_AS(integrate(h, generic_p0, 0.0, 1e-8), OutOfRangeParameter);
    REQUIRE_THROWS_AS(integrate(h, generic_p0, -1.0, 1e-8), OutOfRangeParameter);
    REQUIRE_THROWS_AS(integrate(h, generic_p0, 2e5, 1e-8), OutOfRangeParameter);
    REQUIRE_THROWS_AS(integrate(h, generic_p0, 1.0, 1e-13), OutOfRangeParameter);
    REQUIRE_THROWS_AS(integrate(h, generic_p0, 1.0, 1e-3), OutOfRangeParameter);
}

TEST_CASE("trajectory bookkeeping: endpoints, monotone times, unit samples", "[flow]") {
    const Trajectory tr = integrate(FieldSpec::conformal_hopf(), generic_p0, 12.5, 1e-8);
    REQUIRE(tr.times.front() == 0.0);
    REQUIRE(tr.times.back() == 12.5);  // final step lands exactly on T
    REQUIRE((tr.points.front() - generic_p0).norm() < 1e-15);
    for (std::size_t i = 1; i < tr.times.size(); ++i) {
        REQUIRE(tr.times[i] > tr.times[i - 1]);
        // step cap keeps consecutive samples within 0.05 chordal distance
        REQUIRE((tr.points[i] - tr.points[i - 1]).norm() < 0.05);
    }
    for (const Vec4& p : tr.points) REQUIRE(std::abs(p.norm() - 1.0) < 1e-15);
}

TEST_CASE("endpoint error stays far below tol times horizon", "[flow]") {
    const double T = 2.0 * pi;
    struct Case {
        double tol, bound;
    };
    // Measured endpoint errors are 4.1e-11 (cap-limited) and 5.6e-14; the
    // bounds keep a >20x margin while still witnessing the tol ordering.
    const Case cases[] = {{1e-6, 1e-9}, {1e-10, 5e-12}};
    double prev_err = 1.0;
    for (const Case& c : cases) {
        const Trajectory tr = integrate(FieldSpec::hopf(), generic_p0, T, c.tol);
        const double err = (tr.points.back() - hopf_exact(generic_p0, T)).norm();
        REQUIRE(err < c.bound);
        REQUIRE(err < c.tol * T);  // the error-per-unit-time contract
        REQUIRE(err < prev_err);
        prev_err = err;
    }
    // A closed ellipsoid orbit: through (0,0,1,0) only the fast plane moves,
    // with period pi at rate b = 2.
    const Trajectory tr = integrate(FieldSpec::ellipsoid_reeb(1, 2), Vec4(0, 0, 1, 0), pi, 1e-6);
    REQUIRE((tr.points.back() - Vec4(0, 0, 1, 0)).norm() < 1e-9);
}

TEST_CASE("flow conserves the plane split invariant", "[flow]") {
    // x1^2 + x2^2 is constant along all catalog flows; drift measures the
    // integrator, not the field.
    const double c0 = generic_p0[0] * generic_p0[0] + generic_p0[1] * generic_p0[1];
    for (const auto& spec :
         {FieldSpec::hopf(), FieldSpec::ellipsoid_reeb(1.0, std::sqrt(2.0)),
          FieldSpec::conformal_hopf()}) {
        const Trajectory tr = integrate(spec, generic_p0, 100.0, 1e-10);
        double worst = 0.0;
        for (const Vec4& p : tr.points)
            worst = std::max(worst, std::abs(p[0] * p[0] + p[1] * p[1] - c0));
        REQUIRE(worst < 1e-9);
    }
}

TEST_CASE("trajectory_at interpolates through the samples", "[flow]") {
    const Trajectory tr = integrate(FieldSpec::hopf(), generic_p0, 10.0, 1e-9);
    for (std::size_t i = 0; i < tr.times.size(); i += 7)
        REQUIRE((trajectory_at(tr, tr.times[i]) - tr.points[i]).norm() < 1e-15);
    // clamped outside the span
    REQUIRE(trajectory_at(tr, -1.0) == tr.points.front());
    REQUIRE(trajectory_at(tr, 11.0) == tr.points.back());
    // Hopf orbits are great circles, which the spherical interpolation
    // reproduces exactly; only integration error remains (measured 3e-12).
    double worst = 0.0;
    for (int k = 0; k <= 5000; ++k) {
        const double t = 10.0 * k / 5000;
        worst = std::max(worst, (trajectory_at(tr, t) - hopf_exact(generic_p0, t)).norm());
    }
    REQUIRE(worst < 1e-10);
}

TEST_CASE("trajectory_at off great circles carries quadratic chord error", "[flow]") {
    const FieldSpec ell = FieldSpec::ellipsoid_reeb(1.0, std::sqrt(2.0));
    const Trajectory coarse = integrate(ell, generic_p0, 10.0, 1e-9);
    const Trajectory fine = integrate(ell, generic_p0, 10.0, 1e-12);
    double worst = 0.0;
    for (int k = 0; k <= 2000; ++k) {
        const double t = 10.0 * k / 2000;
        worst = std::max(worst, (trajectory_at(coarse, t) - trajectory_at(fine, t)).norm());
    }
    // interpolation error at the 0.035 step cap, measured 2.3e-5
    REQUIRE(worst < 2e-4);
    REQUIRE(worst > 1e-8);  // genuinely interpolating, not resampling
}

TEST_CASE("hopf recurrences land on multiples of 2 pi", "[flow]") {
    const Trajectory tr = integrate(FieldSpec::hopf(), generic_p0, 40.0, 1e-9);
    const auto events = find_recurrences(tr, 0.05);
    REQUIRE(events.size() == 6);
    for (std::size_t k = 0; k < events.size(); ++k) {
        const double expected = 2.0 * pi * static_cast<double>(k + 1);
        REQUIRE(std::abs(events[k].time - expected) < 1e-5);  // measured 4e-7
        REQUIRE(events[k].gap < 2e-3);  // parabola floor, measured <= 1.9e-4
        REQUIRE(events[k].gap <= 0.05);
        REQUIRE(events[k].time > 1.0);
        if (k > 0) REQUIRE(events[k].time > events[k - 1].time);
    }
}

TEST_CASE("recurrences agree with the closed-form distance oracle", "[flow]") {
    // For the (1, sqrt 2) ellipsoid flow from (.5,.5,.5,.5), the chordal
    // return distance is exactly sqrt(2 - cos t - cos(sqrt 2 t)).
    const double r = std::sqrt(2.0);
    auto dist_sq = [r](double t) { return 2.0 - std::cos(t) - std::cos(r * t); };

    const Trajectory tr = integrate(FieldSpec::ellipsoid_reeb(1.0, r), Vec4(0.5, 0.5, 0.5, 0.5),
                                    640.0, 1e-9);
    const auto events = find_recurrences(tr, 0.05);

    // Independent scan for qualifying minima of the closed form.
    std::vector<double> oracle_times;
    double prev2 = dist_sq(1.0), prev = dist_sq(1.0005);
    for (double t = 1.001; t <= 640.0; t += 0.0005) {
        const double cur = dist_sq(t);
        if (prev <= prev2 && prev < cur && std::sqrt(prev) <= 0.05) {
            double lo = t - 0.002, hi = t + 0.001;
            for (int it = 0; it < 100; ++it) {
                const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
                if (dist_sq(m1) < dist_sq(m2))
                    hi = m2;
                else
                    lo = m1;
            }
            oracle_times.push_back(0.5 * (lo + hi));
        }
        prev2 = prev;
        prev = cur;
    }

    REQUIRE(events.size() == oracle_times.size());
    REQUIRE(events.size() >= 3);
    for (std::size_t i = 0; i < events.size(); ++i) {
        REQUIRE(std::abs(events[i].time - oracle_times[i]) < 1e-4);  // measured 1.3e-6
        REQUIRE(std::abs(events[i].gap - std::sqrt(dist_sq(oracle_times[i]))) < 1e-4);
    }
}

TEST_CASE("quasi-periodic orbits show no short-time recurrence", "[flow]") {
    const Trajectory tr = integrate(FieldSpec::ellipsoid_reeb(1.0, std::sqrt(2.0)),
                                    Vec4(0.5, 0.5, 0.5, 0.5), 50.0, 1e-9);
    REQUIRE(find_recurrences(tr, 0.05).empty());
}

TEST_CASE("find_recurrences validates delta and degenerate input", "[flow]") {
    const Trajectory tr = integrate(FieldSpec::hopf(), generic_p0, 8.0, 1e-8);
    REQUIRE_THROWS_AS(find_recurrences(tr, 0.0), OutOfRangeParameter);
    REQUIRE_THROWS_AS(find_recurrences(tr, 2.0), OutOfRangeParameter);
    REQUIRE_THROWS_AS(find_recurrences(tr, -0.1), OutOfRangeParameter);
    Trajectory tiny{{0.0, 0.1}, {Vec4(1, 0, 0, 0), Vec4(0, 1, 0, 0)}, FieldSpec::hopf()};
    REQUIRE(find_recurrences(tiny, 0.5).empty());
}

TEST_CASE("extreme rotation rates underflow the step size", "[flow]") {
    // At rate 1e9 the embedded error estimate floors out on roundoff above
    // tol = 1e-12, so the controller shrinks h past the 1e-12 cutoff.
    REQUIRE_THROWS_AS(integrate(FieldSpec::ellipsoid_reeb(1.0, 1e9), Vec4(0.5, 0.5, 0.5, 0.5),
                                1.0, 1e-12),
                      StepUnderflow);
}

TEST_CASE("close_up joins an exactly periodic trajectory directly", "[flow]") {
    const Trajectory tr = circle_trajectory(2.0 * pi, 200, true);
    REQUIRE((tr.points.back() - tr.points.front()).norm() < 1e-9);
    const Polyline loop = close_up(tr, {2.0 * pi, 0.0}, 0.1);
    REQUIRE(loop.closed());
    REQUIRE(loop.size() == 200);  // duplicate endpoint dropped
    for (std::size_t i = 0; i < loop.size(); ++i)
        REQUIRE((loop.s3(i) - tr.points[i]).norm() < 1e-15);
}

TEST_CASE("close_up bridges a recurrence gap with a geodesic arc", "[flow]") {
    const Trajectory tr = circle_trajectory(2.0 * pi - 0.1, 200, false);
    const double gap = (tr.points.back() - tr.points.front()).norm();
    REQUIRE(std::abs(gap - 2.0 * std::sin(0.05)) < 1e-12);
    const Polyline loop = close_up(tr, {2.0 * pi - 0.1, gap}, 0.0);
    REQUIRE(loop.closed());
    // flow samples survive in order, arc interior appended after them
    REQUIRE(loop.size() > 200);
    for (int i = 0; i < 200; ++i) REQUIRE((loop.s3(i) - tr.points[i]).norm() < 1e-15);
    for (std::size_t i = 200; i < loop.size(); ++i)
        REQUIRE(std::abs(loop.s3(i).norm() - 1.0) < 1e-14);
    // total length is one full circle up to chord discretization
    REQUIRE(std::abs(length(loop) - 2.0 * pi) < 0.01);
}

TEST_CASE("close_up jitters the arc off an obstacle and reports failure at zero jitter",
          "[flow]") {
    Trajectory tr = circle_trajectory(2.0 * pi - 0.1, 200, false);
    const double gap = (tr.points.back() - tr.points.front()).norm();
    const double angle = sphere_angle(tr.points.back(), tr.points.front());
    const Polyline arc0 = geodesic_arc(tr.points.back(), tr.points.front(),
                                       detail::close_up_arc_samples(angle));
    // Plant an interior arc vertex into the middle of the flow; the plain
    // closing arc now touches the flow polyline exactly.
    tr.points[100] = arc0.s3(2);
    const RecurrenceEvent ev{2.0 * pi - 0.1, gap};
    REQUIRE_THROWS_AS(close_up(tr, ev, 0.0), EmbeddingFailure);
    const Polyline fixed = close_up(tr, ev, 0.1);
    REQUIRE(fixed.closed());
    REQUIRE(fixed.size() == 204);
    // The bowed arc leaves the flow plane; its interior vertices pick up a
    // third coordinate.
    double lifted = 0.0;
    for (std::size_t i = 200; i < fixed.size(); ++i)
        lifted = std::max(lifted, std::abs(fixed.s3(i)[2]) + std::abs(fixed.s3(i)[3]));
    REQUIRE(lifted > 1e-3);
}

TEST_CASE("close_up validates event time and jitter", "[flow]") {
    const Trajectory tr = circle_trajectory(2.0 * pi - 0.1, 50, false);
    REQUIRE_THROWS_AS(close_up(tr, {7.0, 0.1}, 0.1), OutOfRangeParameter);
    REQUIRE_THROWS_AS(close_up(tr, {0.0, 0.1}, 0.1), OutOfRangeParameter);
    REQUIRE_THROWS_AS(close_up(tr, {3.0, 0.1}, -0.5), OutOfRangeParameter);
}

TEST_CASE("an integrated hopf orbit closes into a fiber that links its neighbors", "[flow]") {
    const Trajectory tr = integrate(FieldSpec::hopf(), generic_p0, 7.0, 1e-9);
    const auto events = find_recurrences(tr, 0.05);
    REQUIRE(events.size() == 1);
    REQUIRE(std::abs(events[0].time - 2.0 * pi) < 1e-5);
    const Polyline loop = close_up(tr, events[0], 0.1);
    REQUIRE(loop.closed());
    REQUIRE(std::abs(length(loop) - 2.0 * pi) < 0.01);
    const Polyline other = fiber_loop(FieldSpec::hopf(), Vec4(0, 0, 1, 0), 512);
    const LinkingResult lk = linking_integral(loop, other);
    REQUIRE(std::abs(lk.value - 1.0) < 1e-3);
    REQUIRE(crossing_number(loop, other) == 1);
}

TEST_CASE("trajectory cache round trips bitwise and detects tampering", "[flow]") {
    const auto dir = rhtest::scratch_dir("flow-cache");
    const FieldSpec h = FieldSpec::hopf();
    const std::string key = trajectory_cache_key(h, generic_p0, 5.0, 1e-8);
    const auto path = dir / (key + ".traj");
    std::filesystem::remove(path);

    const Trajectory first = integrate_cached(h, generic_p0, 5.0, 1e-8, dir.string());
    REQUIRE(std::filesystem::exists(path));
    const Trajectory second = integrate_cached(h, generic_p0, 5.0, 1e-8, dir.string());
    REQUIRE(second.times == first.times);
    for (std::size_t i = 0; i < first.points.size(); ++i)
        REQUIRE(second.points[i] == first.points[i]);

    // Perturb an interior sample in the cache file; a hit must surface the
    // tampered value, proving the second call loads rather than recomputes.
    Trajectory tampered = first;
    tampered.points[first.points.size() / 2][2] += 0.25;
    save_trajectory(path.string(), tampered);
    const Trajectory third = integrate_cached(h, generic_p0, 5.0, 1e-8, dir.string());
    REQUIRE(third.points[first.points.size() / 2] ==
            tampered.points[first.points.size() / 2]);
    std::filesystem::remove(path);
}

TEST_CASE("corrupt cache entries are recomputed, not trusted", "[flow]") {
    const auto dir = rhtest::scratch_dir("flow-cache");
    const FieldSpec h = FieldSpec::hopf();
    const std::string key = trajectory_cache_key(h, generic_p0, 3.0, 1e-8);
    const auto path = dir / (key + ".traj");
    {
        std::ofstream f(path);
        f << "# field: hopf\nnot a number row\n";
    }
    const Trajectory tr = integrate_cached(h, generic_p0, 3.0, 1e-8, dir.string());
    REQUIRE(tr.times.back() == 3.0);
    REQUIRE((tr.points.back() - hopf_exact(generic_p0, 3.0)).norm() < 1e-8);
    // the bad entry was replaced by a valid one
    const auto reloaded = load_trajectory(path.string(), h);
    REQUIRE(reloaded.has_value());
    REQUIRE(reloaded->times.back() == 3.0);
    std::filesystem::remove(path);
}

TEST_CASE("cache loader rejects malformed trajectories", "[flow]") {
    const auto dir = rhtest::scratch_dir("flow-cache");
    const FieldSpec h = FieldSpec::hopf();
    auto write_text = [&](const std::string& name, const std::string& text) {
        const auto p = dir / name;
        std::ofstream f(p);
        f << text;
        return p.string();
    };
    REQUIRE_FALSE(load_trajectory((dir / "absent.traj").string(), h).has_value());
    REQUIRE_FALSE(load_trajectory(
                      write_text("nonmono.traj", "0 1 0 0 0\n0.5 0 1 0 0\n0.5 0 0 1 0\n"), h)
                      .has_value());
    REQUIRE_FALSE(
        load_trajectory(write_text("nostart.traj", "0.5 1 0 0 0\n1.0 0 1 0 0\n"), h)
            .has_value());
    REQUIRE_FALSE(load_trajectory(write_text("single.traj", "0 1 0 0 0\n"), h).has_value());
    // comments and blank lines are tolerated in a valid file
    const auto ok = load_trajectory(
        write_text("ok.traj", "# field: hopf\n\n0 1 0 0 0\n1 0 1 0 0\n"), h);
    REQUIRE(ok.has_value());
    REQUIRE(ok->times == std::vector<double>{0.0, 1.0});
}

TEST_CASE("cache keys separate field, seed, horizon, and tolerance", "[flow]") {
    const FieldSpec h = FieldSpec::hopf();
    std::set<std::string> keys;
    keys.insert(trajectory_cache_key(h, generic_p0, 5.0, 1e-8));
    keys.insert(trajectory_cache_key(FieldSpec::antihopf(), generic_p0, 5.0, 1e-8));
    keys.insert(trajectory_cache_key(h, Vec4(0, 0, 1, 0), 5.0, 1e-8));
    keys.insert(trajectory_cache_key(h, generic_p0, 6.0, 1e-8));
    keys.insert(trajectory_cache_key(h, generic_p0, 5.0, 1e-9));
    REQUIRE(keys.size() == 5);
    // deterministic: same inputs, same key
    REQUIRE(trajectory_cache_key(h, generic_p0, 5.0, 1e-8) ==
            trajectory_cache_key(h, generic_p0, 5.0, 1e-8));
}

TEST_CASE("empty cache dir bypasses the cache entirely", "[flow]") {
    const Trajectory direct = integrate(FieldSpec::hopf(), generic_p0, 2.0, 1e-8);
    const Trajectory via = integrate_cached(FieldSpec::hopf(), generic_p0, 2.0, 1e-8, "");
    REQUIRE(via.times == direct.times);
    for (std::size_t i = 0; i < direct.points.size(); ++i)
        REQUIRE(via.points[i] == direct.points[i]);
}
